#include "qapt/qforms.hpp"

#include "qapt/error.hpp"
#include "qapt/textcodec.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>

namespace qapt::qforms {

namespace {

using textcodec::TextKind;

const std::vector<Param> kFiveParams = {Param::FreshwaterNorth, Param::FreshwaterSouth, Param::EkmanTransport,
                                        Param::LowDepthInit, Param::Friction};

const std::vector<SynonymGroup> kStructural = {
    {"lead_set", {"If I set", "Setting"}},
    {"lead_inc", {"If I increase", "By increasing"}},
    {"aux", {"will", "does"}},
    {"join2", {",", "and"}},
    {"join3", {", and", ","}},
    {"ending", {"does the AMOC collapse?", "will the AMOC collapse?", "does M_n change sign?"}},
};

const std::array<std::vector<std::string>, 6> kParamPhrases = {{
    {"N"},
    {"Fwn", "the freshwater flux in the northern ocean", "the northern freshwater flux"},
    {"Fws", "the freshwater flux in the southern ocean", "the southern freshwater flux"},
    {"M_ek", "the Ekman transport", "the wind-driven transport"},
    {"D_low0", "the starting depth of the low box", "the initial low box depth"},
    {"epsilon", "the overturning friction", "the friction coefficient"},
}};

const std::array<std::vector<std::string>, 7> kVariablePhrases = {{
    {"M_n", "the AMOC"},
    {"salinity in the northern box"},
    {"salinity in the southern box"},
    {"salinity in the low latitude box"},
    {"salinity in the deep box"},
    {"temperature in the low latitude box"},
    {"the depth of the low box"},
}};

const std::string& option(std::string_view group, std::size_t i) { return find_group(group)->options.at(i); }

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::vector<std::string> question_tokens(std::string_view text) { return textcodec::tokenize(text, TextKind::Question); }

class Layout {
public:
  Layout& text(std::string_view s) {
    for (auto& t : question_tokens(s)) elements_.push_back({Element::Kind::Word, t, 0, false, {}});
    return *this;
  }
  Layout& number(int slot) {
    elements_.push_back({Element::Kind::Number, {}, slot, false, {}});
    return *this;
  }
  Layout& param(int slot, bool noun) {
    elements_.push_back({Element::Kind::Param, {}, slot, noun, {}});
    return *this;
  }
  Layout& variable(int slot, std::vector<Variable> admissible) {
    elements_.push_back({Element::Kind::Variable, {}, slot, false, std::move(admissible)});
    return *this;
  }
  /// "{p1} to {v1}, {p2} to {v2}, and {p3} to {v3}" with the joiner picked by `join`.
  Layout& clauses(const Shape& s, std::size_t count, std::size_t join) {
    for (std::size_t k = 0; k < count; ++k) {
      if (k > 0) {
        if (count == 2) text(option("join2", join));
        else text(k + 1 == count ? option("join3", join) : ",");
      }
      param(s.param_slot(k), s.noun_params).text("to").number(s.value_slot(k));
    }
    return *this;
  }
  std::vector<Element> take() { return std::move(elements_); }

private:
  std::vector<Element> elements_;
};

Pattern single(Layout layout) { return {layout.take(), {}, 1}; }

QuestionForm make_form(int id, std::string display, Shape shape) {
  QuestionForm f;
  f.id = id;
  f.display = std::move(display);
  f.shape = std::move(shape);
  return f;
}

/// Multi-clause SetTo forms: every clause count, joiner and leading phrase,
/// with `tail` appending the closing words for a given structural choice.
void expand_clause_patterns(QuestionForm& f, const std::vector<std::string>& tail_groups,
                            const std::function<void(Layout&, const SynonymChoice&)>& tail) {
  std::vector<SynonymChoice> tails{{}};
  for (const auto& g : tail_groups) {
    std::vector<SynonymChoice> next;
    for (const auto& t : tails)
      for (std::size_t i = 0; i < find_group(g)->options.size(); ++i) {
        auto c = t;
        c[g] = i;
        next.push_back(std::move(c));
      }
    tails = std::move(next);
  }
  for (std::size_t lead = 0; lead < 2; ++lead)
    for (std::size_t count = f.shape.min_clauses; count <= f.shape.max_clauses; ++count) {
      const std::string join_group = count == 2 ? "join2" : count == 3 ? "join3" : "";
      const std::size_t joins = join_group.empty() ? 1 : 2;
      for (std::size_t j = 0; j < joins; ++j)
        for (const auto& t : tails) {
          Layout l;
          l.text(option("lead_set", lead)).clauses(f.shape, count, j);
          tail(l, t);
          Pattern p{l.take(), t, count};
          p.structure["lead_set"] = lead;
          if (!join_group.empty()) p.structure[join_group] = j;
          f.patterns.push_back(std::move(p));
        }
    }
  f.groups = {"lead_set", "join2", "join3"};
  f.groups.insert(f.groups.end(), tail_groups.begin(), tail_groups.end());
}

std::vector<QuestionForm> make_forms() {
  std::vector<QuestionForm> out;
  const auto M_n = Variable::Overturning;

  {
    Shape s;
    s.query = dsl::Query::FinalValue;
    s.steps_slot = 1;
    s.first_slot = 2;
    s.params = kFiveParams;
    auto f = make_form(1, "What is the value of M_n at time step {1} if {2} is {3}?", s);
    f.patterns.push_back(single(std::move(Layout()
                                              .text("What is the value of M_n at time step")
                                              .number(1)
                                              .text("if")
                                              .param(2, false)
                                              .text("is")
                                              .number(3)
                                              .text("?"))));
    out.push_back(std::move(f));
  }
  {
    Shape s;
    s.query = dsl::Query::ChangeSign;
    s.min_clauses = s.max_clauses = 2;
    s.params = kFiveParams;
    auto f = make_form(2, "If {1} is {2} and {3} is {4}, does the AMOC collapse?", s);
    Pattern p = single(std::move(Layout()
                                     .text("If")
                                     .param(1, false)
                                     .text("is")
                                     .number(2)
                                     .text("and")
                                     .param(3, false)
                                     .text("is")
                                     .number(4)
                                     .text(", does the AMOC collapse?")));
    p.clauses = 2;
    f.patterns.push_back(std::move(p));
    out.push_back(std::move(f));
  }
  {
    Shape s;
    s.query = dsl::Query::FinalValue;
    s.params = kFiveParams;
    auto f = make_form(3, "What is the final value of the AMOC when {1} is {2}?", s);
    f.patterns.push_back(single(std::move(
        Layout().text("What is the final value of the AMOC when").param(1, false).text("is").number(2).text("?"))));
    out.push_back(std::move(f));
  }
  {
    Shape s;
    s.query = dsl::Query::ChangeSign;
    s.params = kFiveParams;
    auto f = make_form(4, "Does {1} collapse the AMOC at {2}?", s);
    f.patterns.push_back(
        single(std::move(Layout().text("Does").param(1, false).text("collapse the AMOC at").number(2).text("?"))));
    out.push_back(std::move(f));
  }
  {
    Shape s;
    s.query = dsl::Query::FinalValue;
    s.first_slot = 2;
    s.params = kFiveParams;
    s.noun_params = true;
    s.variable_slot = 1;
    s.variables.assign(boxmodel::kAllVariables.begin(), boxmodel::kAllVariables.end());
    auto f = make_form(5, "What is the final value of {1} if I set {2} to {3}?", s);
    f.patterns.push_back(single(std::move(Layout()
                                              .text("What is the final value of")
                                              .variable(1, s.variables)
                                              .text("if I set")
                                              .param(2, true)
                                              .text("to")
                                              .number(3)
                                              .text("?"))));
    out.push_back(std::move(f));
  }
  for (auto [id, target, text] : {std::tuple{6, M_n, "M_n"}, std::tuple{7, Variable::SaltNorth, "salinity in the northern box"}}) {
    Shape s;
    s.query = dsl::Query::IncreaseOf;
    s.clause_kind = dsl::ClauseKind::IncreaseBy;
    s.fixed_param = Param::FreshwaterNorth;
    s.variable = target;
    const std::string tail = std::string(", will ") + text + " increase?";
    auto f = make_form(id, "If I increase Fwn by {1}" + tail, s);
    f.patterns.push_back(single(std::move(Layout().text("If I increase Fwn by").number(1).text(tail))));
    out.push_back(std::move(f));
  }
  {
    Shape s;
    s.query = dsl::Query::IncreaseOf;
    s.max_clauses = 3;
    s.params = kFiveParams;
    s.noun_params = true;
    auto f = make_form(8, "If I set {1} to {2}, {3} to {4}, and {5} to {6}, will M_n increase?", s);
    expand_clause_patterns(f, {"aux"}, [&](Layout& l, const SynonymChoice& c) {
      l.text(",").text(option("aux", c.at("aux"))).variable(0, {M_n}).text("increase?");
    });
    out.push_back(std::move(f));
  }
  {
    Shape s;
    s.query = dsl::Query::IncreaseOf;
    s.clause_kind = dsl::ClauseKind::IncreaseBy;
    s.params = {Param::FreshwaterSouth, Param::EkmanTransport, Param::LowDepthInit, Param::Friction};
    s.noun_params = true;
    s.variable_slot = 3;
    s.variables = {M_n, Variable::SaltNorth, Variable::TempLow};
    auto f = make_form(9, "If I increase {1} by {2}, will {3} increase?", s);
    for (std::size_t lead = 0; lead < 2; ++lead)
      for (std::size_t aux = 0; aux < 2; ++aux) {
        Layout l;
        l.text(option("lead_inc", lead)).param(1, true).text("by").number(2).text(",");
        l.text(option("aux", aux)).variable(3, s.variables).text("increase?");
        f.patterns.push_back({l.take(), {{"lead_inc", lead}, {"aux", aux}}, 1});
      }
    f.groups = {"lead_inc", "aux"};
    out.push_back(std::move(f));
  }
  {
    Shape s;
    s.query = dsl::Query::ChangeSign;
    s.max_clauses = 3;
    s.params = kFiveParams;
    auto f = make_form(10, "If I set {1} to {2}, {3} to {4}, and {5} to {6}, does the AMOC collapse?", s);
    expand_clause_patterns(f, {"ending"}, [](Layout& l, const SynonymChoice& c) {
      l.text(",").text(option("ending", c.at("ending")));
    });
    out.push_back(std::move(f));
  }
  return out;
}

const std::vector<QuestionForm>& registry() {
  static const std::vector<QuestionForm> forms = make_forms();
  return forms;
}

using TokenTable = std::vector<std::vector<std::vector<std::string>>>;

const TokenTable& param_tokens() {
  static const TokenTable table = [] {
    TokenTable t;
    for (const auto& phrases : kParamPhrases) {
      auto& row = t.emplace_back();
      for (const auto& ph : phrases) row.push_back(question_tokens(ph));
    }
    return t;
  }();
  return table;
}

const TokenTable& variable_tokens() {
  static const TokenTable table = [] {
    TokenTable t;
    for (const auto& phrases : kVariablePhrases) {
      auto& row = t.emplace_back();
      for (const auto& ph : phrases) row.push_back(question_tokens(ph));
    }
    return t;
  }();
  return table;
}

std::size_t index(Param p) { return static_cast<std::size_t>(p); }
std::size_t index(Variable v) { return static_cast<std::size_t>(v); }

template <class T>
T slot_as(const Binding& b, int slot, std::string_view what) {
  auto it = b.find(slot);
  if (it == b.end()) throw InvalidBinding("slot {" + std::to_string(slot) + "} is not bound");
  if (const T* v = std::get_if<T>(&it->second)) return *v;
  throw InvalidBinding("slot {" + std::to_string(slot) + "} must hold a " + std::string(what));
}

std::size_t clause_count(const Shape& s, const Binding& b) {
  if (s.fixed_param) return 1;
  std::size_t c = 0;
  while (c < s.max_clauses && b.count(s.param_slot(c))) ++c;
  return c;
}

std::size_t chosen(const SynonymChoice& c, const std::string& group) {
  auto it = c.find(group);
  return it == c.end() ? 0 : it->second;
}

class Matcher {
public:
  Matcher(const QuestionForm& f, const Pattern& p, const std::vector<std::string>& toks)
      : form_(f), pattern_(p), toks_(toks) {}

  std::optional<Match> run() {
    if (!step(0, 0)) return std::nullopt;
    SynonymChoice choice = pattern_.structure;
    choice.insert(choice_.begin(), choice_.end());
    return Match{form_.id, binding_, std::move(choice), std::move(*program_)};
  }

private:
  bool phrase_at(const std::vector<std::string>& phrase, std::size_t ti) const {
    if (ti + phrase.size() > toks_.size()) return false;
    for (std::size_t i = 0; i < phrase.size(); ++i)
      if (!iequals(phrase[i], toks_[ti + i])) return false;
    return true;
  }

  bool finish() {
    try {
      dsl::Program p = build(form_, binding_);
      if (!dsl::validate(p).empty()) return false;
      program_ = std::move(p);
      return true;
    } catch (const InvalidBinding&) {
      return false;
    }
  }

  bool step(std::size_t ei, std::size_t ti) {
    const auto& els = pattern_.elements;
    if (ei == els.size()) return ti == toks_.size() && finish();
    if (ti >= toks_.size()) return false;
    const Element& e = els[ei];
    switch (e.kind) {
      case Element::Kind::Word:
        return iequals(e.text, toks_[ti]) && step(ei + 1, ti + 1);
      case Element::Kind::Number: {
        auto v = dsl::parse_number(toks_[ti]);
        if (!v) return false;
        binding_[e.slot] = *v;
        if (step(ei + 1, ti + 1)) return true;
        binding_.erase(e.slot);
        return false;
      }
      case Element::Kind::Param:
        for (Param p : form_.shape.params) {
          if (used(p)) continue;
          const auto& phrases = param_tokens()[index(p)];
          const std::size_t options = e.noun ? phrases.size() : 1;
          for (std::size_t i = 0; i < options; ++i) {
            if (!phrase_at(phrases[i], ti)) continue;
            binding_[e.slot] = p;
            if (e.noun) choice_[std::string(boxmodel::name(p))] = i;
            if (step(ei + 1, ti + phrases[i].size())) return true;
            binding_.erase(e.slot);
            choice_.erase(std::string(boxmodel::name(p)));
          }
        }
        return false;
      case Element::Kind::Variable:
        for (Variable v : e.variables) {
          const auto& phrases = variable_tokens()[index(v)];
          for (std::size_t i = 0; i < phrases.size(); ++i) {
            if (!phrase_at(phrases[i], ti)) continue;
            if (e.slot != 0) binding_[e.slot] = v;
            if (phrases.size() > 1) choice_[std::string(boxmodel::name(v))] = i;
            if (step(ei + 1, ti + phrases[i].size())) return true;
            if (e.slot != 0) binding_.erase(e.slot);
            choice_.erase(std::string(boxmodel::name(v)));
          }
        }
        return false;
    }
    return false;
  }

  bool used(Param p) const {
    for (const auto& [slot, value] : binding_)
      if (const Param* q = std::get_if<Param>(&value); q && *q == p) return true;
    return false;
  }

  const QuestionForm& form_;
  const Pattern& pattern_;
  const std::vector<std::string>& toks_;
  Binding binding_;
  SynonymChoice choice_;
  std::optional<dsl::Program> program_;
};

/// Sum over ordered distinct selections of `k` params of the product of their
/// phrase counts.
std::uint64_t weighted_selections(const std::vector<Param>& params, std::size_t k, bool noun,
                                  std::vector<bool>& taken) {
  if (k == 0) return 1;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (taken[i]) continue;
    taken[i] = true;
    const std::uint64_t w = noun ? param_phrases(params[i]).size() : 1;
    total += w * weighted_selections(params, k - 1, noun, taken);
    taken[i] = false;
  }
  return total;
}

std::string_view slot_kind_name(Element::Kind k) {
  switch (k) {
    case Element::Kind::Number: return "number";
    case Element::Kind::Param: return "param";
    case Element::Kind::Variable: return "variable";
    case Element::Kind::Word: break;
  }
  return "word";
}

}  // namespace

std::span<const SynonymGroup> structural_groups() { return kStructural; }

const SynonymGroup* find_group(std::string_view name) {
  for (const auto& g : kStructural)
    if (g.name == name) return &g;
  return nullptr;
}

std::span<const std::string> param_phrases(Param p) { return kParamPhrases[index(p)]; }
std::span<const std::string> variable_phrases(Variable v) { return kVariablePhrases[index(v)]; }

std::uint64_t QuestionForm::variant_count() const {
  std::uint64_t total = 0;
  for (const Pattern& p : patterns) {
    std::size_t params = 0;
    std::uint64_t vars = 1;
    for (const Element& e : p.elements) {
      if (e.kind == Element::Kind::Param) ++params;
      if (e.kind == Element::Kind::Variable) {
        std::uint64_t n = 0;
        for (Variable v : e.variables) n += variable_phrases(v).size();
        vars *= n;
      }
    }
    std::vector<bool> taken(shape.params.size(), false);
    total += weighted_selections(shape.params, params, shape.noun_params, taken) * vars;
  }
  return total;
}

std::span<const QuestionForm> forms() { return registry(); }

const QuestionForm& form(int form_id) {
  if (form_id < 1 || form_id > kFormCount) throw UnknownForm("no question form with id " + std::to_string(form_id));
  return registry()[static_cast<std::size_t>(form_id - 1)];
}

dsl::Program build(const QuestionForm& f, const Binding& b) {
  const Shape& s = f.shape;
  dsl::Program p{s.query, {}, s.variable};
  if (s.steps_slot)
    p.run.clauses.push_back({dsl::ClauseKind::SetTo, Param::Steps, slot_as<double>(b, *s.steps_slot, "number")});
  const std::size_t count = clause_count(s, b);
  if (count < s.min_clauses || count > s.max_clauses)
    throw InvalidBinding("form " + std::to_string(f.id) + " takes " + std::to_string(s.min_clauses) + " to " +
                         std::to_string(s.max_clauses) + " clauses, got " + std::to_string(count));
  for (std::size_t k = 0; k < count; ++k) {
    const Param param = s.fixed_param ? *s.fixed_param : slot_as<Param>(b, s.param_slot(k), "parameter");
    if (!s.fixed_param && std::find(s.params.begin(), s.params.end(), param) == s.params.end())
      throw InvalidBinding("parameter " + std::string(boxmodel::name(param)) + " is not admissible in form " +
                           std::to_string(f.id));
    p.run.clauses.push_back({s.clause_kind, param, slot_as<double>(b, s.value_slot(k), "number")});
  }
  if (s.variable_slot) {
    p.variable = slot_as<Variable>(b, *s.variable_slot, "variable");
    if (std::find(s.variables.begin(), s.variables.end(), p.variable) == s.variables.end())
      throw InvalidBinding("variable " + std::string(boxmodel::name(p.variable)) + " is not admissible in form " +
                           std::to_string(f.id));
  }
  return p;
}

std::optional<Binding> unbuild(const QuestionForm& f, const dsl::Program& p) {
  const Shape& s = f.shape;
  if (p.query != s.query) return std::nullopt;
  Binding b;
  if (s.variable_slot) {
    if (std::find(s.variables.begin(), s.variables.end(), p.variable) == s.variables.end()) return std::nullopt;
    b[*s.variable_slot] = p.variable;
  } else if (p.variable != s.variable) {
    return std::nullopt;
  }
  std::size_t first = 0;
  if (s.steps_slot) {
    if (p.run.clauses.empty()) return std::nullopt;
    const dsl::Clause& c = p.run.clauses.front();
    if (c.kind != dsl::ClauseKind::SetTo || c.param != Param::Steps) return std::nullopt;
    b[*s.steps_slot] = c.value;
    first = 1;
  }
  const std::size_t count = p.run.clauses.size() - first;
  if (count < s.min_clauses || count > s.max_clauses) return std::nullopt;
  for (std::size_t k = 0; k < count; ++k) {
    const dsl::Clause& c = p.run.clauses[first + k];
    if (c.kind != s.clause_kind) return std::nullopt;
    if (s.fixed_param) {
      if (c.param != *s.fixed_param) return std::nullopt;
    } else {
      if (std::find(s.params.begin(), s.params.end(), c.param) == s.params.end()) return std::nullopt;
      for (std::size_t j = 0; j < k; ++j)
        if (p.run.clauses[first + j].param == c.param) return std::nullopt;
      b[s.param_slot(k)] = c.param;
    }
    b[s.value_slot(k)] = c.value;
  }
  return b;
}

Instance instantiate(int form_id, const Binding& binding, const SynonymChoice& choice) {
  const QuestionForm& f = form(form_id);
  const Shape& s = f.shape;

  // Every bound slot must be one the form reads.
  const std::size_t count = clause_count(s, binding);
  std::vector<int> expected;
  if (s.steps_slot) expected.push_back(*s.steps_slot);
  for (std::size_t k = 0; k < count; ++k) {
    if (!s.fixed_param) expected.push_back(s.param_slot(k));
    expected.push_back(s.value_slot(k));
  }
  if (s.variable_slot) expected.push_back(*s.variable_slot);
  for (const auto& [slot, value] : binding)
    if (std::find(expected.begin(), expected.end(), slot) == expected.end())
      throw InvalidBinding("form " + std::to_string(form_id) + " has no slot {" + std::to_string(slot) + "}");

  Instance out{{}, build(f, binding)};
  if (auto violations = dsl::validate(out.program); !violations.empty())
    throw InvalidBinding(violations.front().message());

  for (const auto& g : f.groups)
    if (chosen(choice, g) >= find_group(g)->options.size())
      throw InvalidBinding("synonym group '" + g + "' has no option " + std::to_string(chosen(choice, g)));
  for (const auto& [key, index] : choice) {
    const bool structural = std::find(f.groups.begin(), f.groups.end(), key) != f.groups.end();
    if (!structural && !boxmodel::param_from_name(key) && !boxmodel::variable_from_name(key))
      throw InvalidBinding("form " + std::to_string(form_id) + " has no synonym group '" + key + "'");
  }

  const Pattern* pattern = nullptr;
  for (const Pattern& p : f.patterns) {
    if (p.clauses != count) continue;
    bool ok = true;
    for (const auto& [g, i] : p.structure) ok = ok && chosen(choice, g) == i;
    if (ok) {
      pattern = &p;
      break;
    }
  }
  if (!pattern) throw InvalidBinding("form " + std::to_string(form_id) + " has no layout for this choice");

  std::vector<std::string> tokens;
  for (const Element& e : pattern->elements) {
    switch (e.kind) {
      case Element::Kind::Word:
        tokens.push_back(e.text);
        break;
      case Element::Kind::Number:
        tokens.push_back(dsl::format_number(slot_as<double>(binding, e.slot, "number")));
        break;
      case Element::Kind::Param: {
        const Param p = slot_as<Param>(binding, e.slot, "parameter");
        const std::size_t i = e.noun ? chosen(choice, std::string(boxmodel::name(p))) : 0;
        const auto phrases = param_phrases(p);
        if (i >= phrases.size())
          throw InvalidBinding("parameter " + std::string(boxmodel::name(p)) + " has no phrase " + std::to_string(i));
        tokens.push_back(phrases[i]);
        break;
      }
      case Element::Kind::Variable: {
        const Variable v = e.slot != 0 ? slot_as<Variable>(binding, e.slot, "variable") : e.variables.front();
        const std::size_t i = chosen(choice, std::string(boxmodel::name(v)));
        const auto phrases = variable_phrases(v);
        if (i >= phrases.size())
          throw InvalidBinding("variable " + std::string(boxmodel::name(v)) + " has no phrase " + std::to_string(i));
        tokens.push_back(phrases[i]);
        break;
      }
    }
  }
  out.question = textcodec::join_tokens(tokens, TextKind::Question);
  return out;
}

std::optional<Match> try_match(std::string_view question) {
  const auto toks = question_tokens(question);
  for (const QuestionForm& f : forms())
    for (const Pattern& p : f.patterns)
      if (auto m = Matcher(f, p, toks).run()) return m;
  return std::nullopt;
}

Match match_question(std::string_view question) {
  if (auto m = try_match(question)) return std::move(*m);
  throw NoMatch("question does not match any known form: \"" + std::string(question) + "\"");
}

std::optional<int> form_of(const dsl::Program& p) {
  for (const QuestionForm& f : forms())
    if (unbuild(f, p)) return f.id;
  return std::nullopt;
}

std::string canonical_question(const dsl::Program& p) {
  for (const QuestionForm& f : forms()) {
    auto b = unbuild(f, p);
    if (!b) continue;
    try {
      return instantiate(f.id, *b).question;
    } catch (const InvalidBinding& e) {
      throw NotExpressible(std::string("program cannot be phrased: ") + e.what());
    }
  }
  throw NotExpressible("no question form builds " + dsl::print_program(p));
}

std::vector<std::string> lexicon_corpus() {
  std::vector<std::string> corpus;
  for (const QuestionForm& f : forms())
    for (const Pattern& p : f.patterns) {
      std::vector<std::string> words;
      for (const Element& e : p.elements)
        if (e.kind == Element::Kind::Word) words.push_back(e.text);
      corpus.push_back(textcodec::join_tokens(words, TextKind::Question));
    }
  for (const auto& phrases : kParamPhrases) corpus.insert(corpus.end(), phrases.begin(), phrases.end());
  for (const auto& phrases : kVariablePhrases) corpus.insert(corpus.end(), phrases.begin(), phrases.end());

  for (dsl::Query q : dsl::kAllQueries)
    corpus.push_back(std::string(dsl::name(q)) + "(" + std::string(dsl::kRunFunction) + "(SetTo(N,1),IncreaseBy(Fwn,1)),M_n)");
  for (Param p : boxmodel::kAllParams)
    corpus.push_back("FinalValue(four_box_model(SetTo(" + std::string(boxmodel::name(p)) + ",1)),M_n)");
  for (Variable v : boxmodel::kAllVariables)
    corpus.push_back("FinalValue(four_box_model()," + std::string(boxmodel::name(v)) + ")");
  return corpus;
}

nlohmann::ordered_json registry_json() {
  using nlohmann::ordered_json;
  const auto names = [](const auto& xs) {
    ordered_json a = ordered_json::array();
    for (auto x : xs) a.push_back(std::string(boxmodel::name(x)));
    return a;
  };

  ordered_json doc;
  ordered_json forms_json = ordered_json::array();
  for (const QuestionForm& f : forms()) {
    const Shape& s = f.shape;
    ordered_json slots = ordered_json::array();
    const auto add_slot = [&](int slot, Element::Kind kind, ordered_json extra) {
      ordered_json j;
      j["slot"] = slot;
      j["kind"] = slot_kind_name(kind);
      for (auto& [k, v] : extra.items()) j[k] = v;
      slots.push_back(std::move(j));
    };
    if (s.variable_slot) add_slot(*s.variable_slot, Element::Kind::Variable, {{"admissible", names(s.variables)}});
    if (s.steps_slot) add_slot(*s.steps_slot, Element::Kind::Number, {{"param", "N"}});
    for (std::size_t k = 0; k < s.max_clauses; ++k) {
      if (!s.fixed_param)
        add_slot(s.param_slot(k), Element::Kind::Param,
                 {{"admissible", names(s.params)}, {"style", s.noun_params ? "noun" : "symbol"}});
      const std::string param = s.fixed_param ? std::string(boxmodel::name(*s.fixed_param)) : "";
      add_slot(s.value_slot(k), Element::Kind::Number,
               s.fixed_param ? ordered_json{{"param", param}} : ordered_json::object());
    }
    std::sort(slots.begin(), slots.end(),
              [](const ordered_json& a, const ordered_json& b) { return a["slot"].get<int>() < b["slot"].get<int>(); });

    ordered_json j;
    j["form_id"] = f.id;
    j["template"] = f.display;
    j["query"] = std::string(dsl::name(s.query));
    j["clause_kind"] = std::string(dsl::name(s.clause_kind));
    j["min_clauses"] = s.min_clauses;
    j["max_clauses"] = s.max_clauses;
    if (!s.variable_slot) j["variable"] = std::string(boxmodel::name(s.variable));
    j["slots"] = std::move(slots);
    j["synonym_groups"] = f.groups;
    j["variant_count"] = f.variant_count();
    forms_json.push_back(std::move(j));
  }
  doc["forms"] = std::move(forms_json);

  ordered_json structural;
  for (const auto& g : kStructural) structural[g.name] = g.options;
  ordered_json params;
  for (Param p : boxmodel::kAllParams) params[std::string(boxmodel::name(p))] = kParamPhrases[index(p)];
  ordered_json vars;
  for (Variable v : boxmodel::kAllVariables) vars[std::string(boxmodel::name(v))] = kVariablePhrases[index(v)];
  doc["synonyms"] = {{"structural", structural}, {"parameters", params}, {"variables", vars}};
  return doc;
}

}  // namespace qapt::qforms
