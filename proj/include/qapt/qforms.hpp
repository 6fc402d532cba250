#pragma once

#include "qapt/boxmodel.hpp"
#include "qapt/dsl.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qapt::qforms {

using boxmodel::Param;
using boxmodel::Variable;

inline constexpr int kFormCount = 10;

/// A slot holds a parameter name, a number, or a queried variable.
using SlotValue = std::variant<Param, double, Variable>;
using Binding = std::map<int, SlotValue>;

/// Synonym group name -> option index. Missing groups use option 0, which is
/// the canonical phrasing. Parameter noun phrases are keyed by the parameter
/// name ("Fwn"), variable phrases by the variable name ("M_n").
using SynonymChoice = std::map<std::string, std::size_t>;

struct SynonymGroup {
  std::string name;
  std::vector<std::string> options;
};

/// Structural groups shared by several forms ("lead_set", "aux", ...).
std::span<const SynonymGroup> structural_groups();
const SynonymGroup* find_group(std::string_view name);

/// Option 0 is the DSL symbol; the rest are noun phrases.
std::span<const std::string> param_phrases(Param p);
std::span<const std::string> variable_phrases(Variable v);

/// One element of a concrete question layout.
struct Element {
  enum class Kind { Word, Number, Param, Variable };

  Kind kind = Kind::Word;
  std::string text;                 // Word
  int slot = 0;                     // Number, Param, Variable (0 = fixed variable)
  bool noun = false;                // Param: noun phrases allowed
  std::vector<Variable> variables;  // Variable: admissible set
};

/// A fully expanded layout of a form: structural synonyms and the clause
/// count are fixed, slots and per-name phrases are open.
struct Pattern {
  std::vector<Element> elements;
  SynonymChoice structure;
  std::size_t clauses = 1;
};

/// How a form's slots map onto a program.
struct Shape {
  dsl::Query query = dsl::Query::FinalValue;
  dsl::ClauseKind clause_kind = dsl::ClauseKind::SetTo;
  std::optional<int> steps_slot;     // leading SetTo(N, {slot})
  std::optional<Param> fixed_param;  // single clause on a literal parameter; value in first_slot
  int first_slot = 1;                // clause k uses slots first_slot+2k (param), +1 (value)
  std::size_t min_clauses = 1;
  std::size_t max_clauses = 1;
  std::vector<Param> params;         // admissible clause parameters
  std::optional<int> variable_slot;  // else `variable` is fixed
  Variable variable = Variable::Overturning;
  std::vector<Variable> variables;   // admissible when variable_slot is set
  bool noun_params = false;          // parameter slots accept noun phrases

  int param_slot(std::size_t k) const { return first_slot + 2 * static_cast<int>(k); }
  int value_slot(std::size_t k) const { return fixed_param ? first_slot : param_slot(k) + 1; }
};

struct QuestionForm {
  int id = 0;
  std::string display;  // canonical template with numbered slots
  Shape shape;
  std::vector<Pattern> patterns;
  std::vector<std::string> groups;  // structural groups used

  /// Distinct question texts modulo numeric values: structural choices x
  /// clause orderings x phrase choices.
  std::uint64_t variant_count() const;
};

/// The ten built-in forms, ordered by id. Immutable.
std::span<const QuestionForm> forms();
/// Throws UnknownForm.
const QuestionForm& form(int form_id);

dsl::Program build(const QuestionForm& f, const Binding& b);
/// The binding that makes `f` build `p`, if any.
std::optional<Binding> unbuild(const QuestionForm& f, const dsl::Program& p);

struct Instance {
  std::string question;
  dsl::Program program;
};

/// Throws UnknownForm or InvalidBinding.
Instance instantiate(int form_id, const Binding& binding, const SynonymChoice& choice = {});

struct Match {
  int form_id = 0;
  Binding binding;
  SynonymChoice choice;
  dsl::Program program;
};

std::optional<Match> try_match(std::string_view question);
/// Case-insensitive on words, exact on numbers. Throws NoMatch.
Match match_question(std::string_view question);

/// Lowest-id form that builds p, with option 0 everywhere. Throws NotExpressible.
std::string canonical_question(const dsl::Program& p);
/// Lowest form id that builds p.
std::optional<int> form_of(const dsl::Program& p);

/// Texts covering every word, phrase and program lexeme the registry can
/// produce; building a vocab from them closes it over generated data.
std::vector<std::string> lexicon_corpus();

nlohmann::ordered_json registry_json();

}  // namespace qapt::qforms
