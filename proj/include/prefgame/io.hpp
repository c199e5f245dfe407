#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "prefgame/game.hpp"
#include "prefgame/oracle.hpp"
#include "prefgame/prefclass.hpp"

namespace prefgame {

/* Structured-text formats.
 *
 * All files share one shape: '#' comment lines, blank lines, '[section]'
 * headers, and 'key = value' entries (first '=' splits, both sides trimmed).
 * Parsers are strict: unknown keys, duplicate sections, missing keys, and
 * trailing garbage are all errors. Floating-point values are written with 17
 * significant digits so every number round-trips bit-exactly.
 */

struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct IniSection {
  std::string name;
  std::vector<IniEntry> entries;
  int line = 0;
};

std::vector<IniSection> parse_sections(const std::string& text);

std::string format_double(double v);
double parse_double(const std::string& s, const std::string& what);
std::vector<double> parse_double_list(const std::string& s, const std::string& what);
long long parse_int(const std::string& s, const std::string& what);
std::vector<int> parse_int_list(const std::string& s, const std::string& what);
std::uint64_t parse_seed(const std::string& s, const std::string& what);

// A game plus the preference table that defines the environment:
//   [game] eta, prompts; per prompt [prompt i] weight, actions, pi0 and
//   [pref i] upper = strict upper triangle, row-major.
struct Instance {
  GameConfig cfg;
  PreferenceFunction pref;
};

std::string instance_to_string(const Instance& inst);
Instance instance_from_string(const std::string& text);
Instance instance_load(const std::string& path);
void instance_save(const Instance& inst, const std::string& path);

// Preference class file: [class] kind = finite | linear with the declared
// shape; members as [member j] upper i = ... rows, or [features] phi x a = ...
struct ClassSpec {
  enum class Kind { finite, linear };
  Kind kind = Kind::finite;
  ActionSpace actions;
  int prompts = 0;
  FiniteClass finite;
  LinearBTClass linear;
};

std::string class_to_string(const ClassSpec& cls);
ClassSpec class_from_string(const std::string& text);
ClassSpec class_load(const std::string& path);
void class_save(const ClassSpec& cls, const std::string& path);

// Reward table file: [rewards] prompts = n, r <x> = values.
RewardTable rewards_from_string(const std::string& text);
RewardTable rewards_load(const std::string& path);

// Standalone preference table file: [table] prompts, actions; [pref i] rows.
PreferenceFunction table_from_string(const std::string& text);
PreferenceFunction table_load(const std::string& path);
std::string table_to_string(const PreferenceFunction& P);

/* Oracle specifier strings used by the CLI and experiment configs:
 *   "instance"      the instance's own preference table
 *   "cyclic:<w>"    single-prompt cyclic tournament at strength w
 *   "bt:<path>"     Bradley-Terry oracle from a reward table file
 *   "table:<path>"  explicit preference table file
 * The result is always shape-checked against the instance.
 */
PreferenceFunction resolve_oracle(const std::string& spec, const Instance& inst);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace prefgame
