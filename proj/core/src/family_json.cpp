#include "chainsynth/family_json.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <set>

namespace chainsynth {

using ordered_json = nlohmann::ordered_json;

namespace {

class SexprReader {
public:
    SexprReader(const std::vector<Hole>& holes, std::string_view text) : _holes(holes), _text(text) {}

    Formula read_all() {
        Formula f = read();
        skip_space();
        if (_pos != _text.size()) {
            fail("trailing input");
        }
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ModelError("constraint '" + std::string(_text) + "': " + what + " at offset " + std::to_string(_pos));
    }

    void skip_space() {
        while (_pos < _text.size() && std::isspace(static_cast<unsigned char>(_text[_pos]))) {
            ++_pos;
        }
    }

    std::string symbol() {
        skip_space();
        std::size_t start = _pos;
        while (_pos < _text.size() && !std::isspace(static_cast<unsigned char>(_text[_pos])) && _text[_pos] != '(' &&
               _text[_pos] != ')' && _text[_pos] != '"') {
            ++_pos;
        }
        if (start == _pos) {
            fail("expected a symbol");
        }
        return std::string(_text.substr(start, _pos - start));
    }

    std::string quoted() {
        skip_space();
        if (_pos >= _text.size() || _text[_pos] != '"') {
            fail("expected a quoted option label");
        }
        ++_pos;
        std::string out;
        while (_pos < _text.size() && _text[_pos] != '"') {
            if (_text[_pos] == '\\' && _pos + 1 < _text.size()) {
                ++_pos;
            }
            out += _text[_pos++];
        }
        if (_pos >= _text.size()) {
            fail("unterminated string");
        }
        ++_pos;
        return out;
    }

    void expect(char c) {
        skip_space();
        if (_pos >= _text.size() || _text[_pos] != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++_pos;
    }

    bool peek(char c) {
        skip_space();
        return _pos < _text.size() && _text[_pos] == c;
    }

    Formula read() {
        skip_space();
        if (!peek('(')) {
            std::string word = symbol();
            if (word == "true") {
                return Formula::constant(true);
            }
            if (word == "false") {
                return Formula::constant(false);
            }
            fail("unknown symbol '" + word + "'");
        }
        expect('(');
        std::string head = symbol();
        Formula f;
        if (head == "=") {
            std::string name = symbol();
            std::string label = quoted();
            HoleId h = 0;
            while (h < _holes.size() && _holes[h].name != name) {
                ++h;
            }
            if (h == _holes.size()) {
                fail("unknown hole '" + name + "'");
            }
            const auto& opts = _holes[h].options;
            auto it = std::find(opts.begin(), opts.end(), label);
            if (it == opts.end()) {
                fail("hole '" + name + "' has no option '" + label + "'");
            }
            f = Formula::atom(h, static_cast<OptionIndex>(it - opts.begin()));
        } else {
            std::vector<Formula> args;
            while (!peek(')')) {
                if (_pos >= _text.size()) {
                    fail("unbalanced parentheses");
                }
                args.push_back(read());
            }
            if (head == "not" && args.size() == 1) {
                f = Formula::negation(std::move(args[0]));
            } else if (head == "and") {
                f = Formula::conjunction(std::move(args));
            } else if (head == "or") {
                f = Formula::disjunction(std::move(args));
            } else if (head == "=>" && args.size() == 2) {
                f = Formula::implication(std::move(args[0]), std::move(args[1]));
            } else if (head == "<=>" && args.size() == 2) {
                f = Formula::equivalence(std::move(args[0]), std::move(args[1]));
            } else {
                fail("malformed '" + head + "' form");
            }
        }
        expect(')');
        return f;
    }

    const std::vector<Hole>& _holes;
    std::string_view _text;
    std::size_t _pos = 0;
};

void write_sexpr(const std::vector<Hole>& holes, const Formula& f, std::string& out) {
    using Kind = Formula::Kind;
    switch (f.kind) {
    case Kind::True:
        out += "true";
        return;
    case Kind::False:
        out += "false";
        return;
    case Kind::Atom: {
        out += "(= " + holes.at(f.hole).name + " \"";
        for (char c : holes[f.hole].options.at(f.option)) {
            if (c == '"' || c == '\\') {
                out += '\\';
            }
            out += c;
        }
        out += "\")";
        return;
    }
    default:
        break;
    }
    const char* head = f.kind == Kind::Not       ? "not"
                       : f.kind == Kind::And     ? "and"
                       : f.kind == Kind::Or      ? "or"
                       : f.kind == Kind::Implies ? "=>"
                                                 : "<=>";
    out += '(';
    out += head;
    for (const auto& g : f.args) {
        out += ' ';
        write_sexpr(holes, g, out);
    }
    out += ')';
}

template <typename T>
T get_field(const ordered_json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw ModelError(where + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(where + ": field '" + key + "': " + e.what());
    }
}

HoleId hole_by_name(const std::vector<Hole>& holes, const std::string& name, const std::string& where) {
    for (HoleId h = 0; h < holes.size(); ++h) {
        if (holes[h].name == name) {
            return h;
        }
    }
    throw ModelError(where + ": unknown hole '" + name + "'");
}

} // namespace

Formula parse_constraint(const std::vector<Hole>& holes, std::string_view text) {
    return SexprReader(holes, text).read_all();
}

std::string format_constraint(const std::vector<Hole>& holes, const Formula& f) {
    std::string out;
    write_sexpr(holes, f, out);
    return out;
}

Family family_from_json(std::string_view text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(std::string("malformed JSON family: ") + e.what());
    }
    auto num_states = get_field<std::size_t>(j, "states", "family");
    auto init = get_field<StateIndex>(j, "init", "family");
    CostModel model = CostModel::OptionSum;
    if (j.contains("cost_model")) {
        auto name = get_field<std::string>(j, "cost_model", "family");
        if (name == "structural") {
            model = CostModel::Structural;
        } else if (name != "option-sum") {
            throw ModelError("family: unknown cost model '" + name + "'");
        }
    }

    std::vector<Hole> holes;
    for (const auto& jh : get_field<ordered_json>(j, "holes", "family")) {
        Hole h;
        h.name = get_field<std::string>(jh, "name", "hole");
        h.options = get_field<std::vector<std::string>>(jh, "options", "hole " + h.name);
        if (jh.contains("costs")) {
            h.costs = get_field<std::vector<std::uint64_t>>(jh, "costs", "hole " + h.name);
        }
        holes.push_back(std::move(h));
    }

    std::vector<std::vector<Branch>> rows(num_states);
    std::set<StateIndex> defined;
    for (const auto& jt : get_field<ordered_json>(j, "transitions", "family")) {
        auto from = get_field<StateIndex>(jt, "from", "transition");
        std::string where = "transition from " + std::to_string(from);
        if (from >= num_states || !defined.insert(from).second) {
            throw ModelError(where + ": state out of range or defined twice");
        }
        for (const auto& jb : get_field<ordered_json>(jt, "branches", where)) {
            auto p = get_field<double>(jb, "p", where);
            if (jb.contains("fixed")) {
                rows[from].push_back({p, FixedTarget{get_field<StateIndex>(jb, "fixed", where)}});
                continue;
            }
            HoleTarget ref;
            if (jb.contains("hole")) {
                ref.holes.push_back(hole_by_name(holes, get_field<std::string>(jb, "hole", where), where));
            } else {
                for (const auto& name : get_field<std::vector<std::string>>(jb, "holes", where)) {
                    ref.holes.push_back(hole_by_name(holes, name, where));
                }
            }
            ref.table = get_field<std::vector<StateIndex>>(jb, "table", where);
            rows[from].push_back({p, std::move(ref)});
        }
    }
    if (defined.size() != num_states) {
        throw ModelError("family: every state needs exactly one transitions entry");
    }

    std::vector<Formula> constraints;
    if (j.contains("constraints")) {
        for (const auto& text_c : get_field<std::vector<std::string>>(j, "constraints", "family")) {
            constraints.push_back(parse_constraint(holes, text_c));
        }
    }
    return Family(num_states, init, std::move(holes), std::move(rows), std::move(constraints), model);
}

std::string family_to_json(const Family& fam, int indent) {
    ordered_json j;
    j["states"] = fam.num_states();
    j["init"] = fam.initial();
    j["cost_model"] = to_string(fam.cost_model());
    j["holes"] = ordered_json::array();
    for (const auto& h : fam.holes()) {
        j["holes"].push_back({{"name", h.name}, {"options", h.options}, {"costs", h.costs}});
    }
    j["transitions"] = ordered_json::array();
    for (std::size_t s = 0; s < fam.num_states(); ++s) {
        ordered_json branches = ordered_json::array();
        for (const auto& b : fam.row(static_cast<StateIndex>(s))) {
            ordered_json jb;
            jb["p"] = b.probability;
            if (const auto* f = std::get_if<FixedTarget>(&b.target)) {
                jb["fixed"] = f->state;
            } else {
                const auto& ref = std::get<HoleTarget>(b.target);
                if (ref.holes.size() == 1) {
                    jb["hole"] = fam.hole(ref.holes.front()).name;
                } else {
                    ordered_json names = ordered_json::array();
                    for (HoleId h : ref.holes) {
                        names.push_back(fam.hole(h).name);
                    }
                    jb["holes"] = names;
                }
                jb["table"] = ref.table;
            }
            branches.push_back(std::move(jb));
        }
        j["transitions"].push_back({{"from", s}, {"branches", std::move(branches)}});
    }
    j["constraints"] = ordered_json::array();
    for (const auto& c : fam.constraints()) {
        j["constraints"].push_back(format_constraint(fam.holes(), c));
    }
    return j.dump(indent);
}

} // namespace chainsynth
