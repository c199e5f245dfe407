#include "prefgame/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "prefgame/errors.hpp"

namespace prefgame {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ParseError("line " + std::to_string(line) + ": " + msg);
}

}  // namespace

std::vector<IniSection> parse_sections(const std::string& text) {
  std::vector<IniSection> sections;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) fail(line, "malformed section header");
      IniSection sec;
      sec.name = trim(s.substr(1, s.size() - 2));
      sec.line = line;
      if (sec.name.empty()) fail(line, "empty section name");
      sections.push_back(std::move(sec));
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    if (sections.empty()) fail(line, "entry before any section");
    IniEntry entry;
    entry.key = trim(s.substr(0, eq));
    entry.value = trim(s.substr(eq + 1));
    entry.line = line;
    if (entry.key.empty()) fail(line, "empty key");
    sections.back().entries.push_back(std::move(entry));
  }
  return sections;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& what) {
  if (s.empty()) throw ParseError(what + ": empty number");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size()) {
    throw ParseError(what + ": bad number '" + s + "'");
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok, what));
  return out;
}

long long parse_int(const std::string& s, const std::string& what) {
  if (s.empty()) throw ParseError(what + ": empty integer");
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) {
    throw ParseError(what + ": bad integer '" + s + "'");
  }
  return v;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(static_cast<int>(parse_int(tok, what)));
  return out;
}

std::uint64_t parse_seed(const std::string& s, const std::string& what) {
  if (s.empty()) throw ParseError(what + ": empty seed");
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) {
    throw ParseError(what + ": bad seed '" + s + "'");
  }
  return v;
}

namespace {

// Key-checked view of one section: every lookup marks the key used and
// finish() rejects anything unused, so unknown keys cannot pass silently.
class SectionReader {
 public:
  explicit SectionReader(const IniSection& sec) : sec_(sec), used_(sec.entries.size(), false) {}

  const std::string& get(const std::string& key) {
    const std::string* found = nullptr;
    for (std::size_t i = 0; i < sec_.entries.size(); ++i) {
      if (sec_.entries[i].key == key) {
        if (found != nullptr) fail(sec_.line, "duplicate key '" + key + "' in [" + sec_.name + "]");
        found = &sec_.entries[i].value;
        used_[i] = true;
      }
    }
    if (found == nullptr) fail(sec_.line, "missing key '" + key + "' in [" + sec_.name + "]");
    return *found;
  }

  void finish() {
    for (std::size_t i = 0; i < sec_.entries.size(); ++i) {
      if (!used_[i]) {
        fail(sec_.entries[i].line,
             "unknown key '" + sec_.entries[i].key + "' in [" + sec_.name + "]");
      }
    }
  }

 private:
  const IniSection& sec_;
  std::vector<bool> used_;
};

// Collects sections by name, requiring each to be unique.
std::map<std::string, const IniSection*> index_sections(const std::vector<IniSection>& secs) {
  std::map<std::string, const IniSection*> out;
  for (const IniSection& s : secs) {
    if (!out.emplace(s.name, &s).second) fail(s.line, "duplicate section [" + s.name + "]");
  }
  return out;
}

void expect_section_count(const std::vector<IniSection>& secs, std::size_t expected,
                          const char* what) {
  if (secs.size() != expected) {
    throw ParseError(std::string(what) + ": expected " + std::to_string(expected) +
                     " sections, found " + std::to_string(secs.size()));
  }
}

std::vector<double> read_upper_row(const std::string& value, int k, const std::string& what) {
  std::vector<double> vals = parse_double_list(value, what);
  const std::size_t expected = static_cast<std::size_t>(k) * (k - 1) / 2;
  if (vals.size() != expected) {
    throw ParseError(what + ": expected " + std::to_string(expected) + " entries, found " +
                     std::to_string(vals.size()));
  }
  return vals;
}

void assign_upper(PreferenceFunction& P, int x, const std::vector<double>& vals) {
  const int k = P.actions(x);
  std::size_t idx = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) P.set(x, i, j, vals[idx++]);
  }
}

std::string upper_to_string(const PreferenceFunction& P, int x) {
  std::string out;
  const std::vector<double>& row = P.upper(x);
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i > 0) out += ' ';
    out += format_double(row[i]);
  }
  return out;
}

}  // namespace

std::string instance_to_string(const Instance& inst) {
  std::ostringstream out;
  const int nx = inst.cfg.prompts.size();
  out << "[game]\n";
  out << "eta = " << format_double(inst.cfg.eta) << "\n";
  out << "prompts = " << nx << "\n";
  for (int x = 0; x < nx; ++x) {
    out << "\n[prompt " << x << "]\n";
    out << "weight = " << format_double(inst.cfg.prompts.d0[x]) << "\n";
    out << "actions = " << inst.cfg.actions.counts[x] << "\n";
    out << "pi0 =";
    for (double v : inst.cfg.pi0.rows[x]) out << ' ' << format_double(v);
    out << "\n";
  }
  for (int x = 0; x < nx; ++x) {
    out << "\n[pref " << x << "]\n";
    out << "upper = " << upper_to_string(inst.pref, x) << "\n";
  }
  return out.str();
}

Instance instance_from_string(const std::string& text) {
  const std::vector<IniSection> secs = parse_sections(text);
  if (secs.empty() || secs[0].name != "game") {
    throw ParseError("instance: first section must be [game]");
  }
  auto by_name = index_sections(secs);

  SectionReader game(*by_name.at("game"));
  Instance inst;
  inst.cfg.eta = parse_double(game.get("eta"), "eta");
  const int nx = static_cast<int>(parse_int(game.get("prompts"), "prompts"));
  game.finish();
  if (nx < 1) throw ParseError("instance: prompts must be >= 1");
  expect_section_count(secs, 1 + 2 * static_cast<std::size_t>(nx), "instance");

  inst.cfg.prompts.d0.resize(nx);
  inst.cfg.actions.counts.resize(nx);
  inst.cfg.pi0.rows.resize(nx);
  for (int x = 0; x < nx; ++x) {
    const std::string name = "prompt " + std::to_string(x);
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ParseError("instance: missing section [" + name + "]");
    SectionReader sec(*it->second);
    inst.cfg.prompts.d0[x] = parse_double(sec.get("weight"), name + " weight");
    inst.cfg.actions.counts[x] =
        static_cast<int>(parse_int(sec.get("actions"), name + " actions"));
    inst.cfg.pi0.rows[x] = parse_double_list(sec.get("pi0"), name + " pi0");
    sec.finish();
    if (static_cast<int>(inst.cfg.pi0.rows[x].size()) != inst.cfg.actions.counts[x]) {
      throw ParseError("instance: pi0 length mismatch in [" + name + "]");
    }
  }
  inst.cfg.validate();

  inst.pref = PreferenceFunction(inst.cfg.actions);
  for (int x = 0; x < nx; ++x) {
    const std::string name = "pref " + std::to_string(x);
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ParseError("instance: missing section [" + name + "]");
    SectionReader sec(*it->second);
    assign_upper(inst.pref, x,
                 read_upper_row(sec.get("upper"), inst.cfg.actions.counts[x], name));
    sec.finish();
  }
  return inst;
}

Instance instance_load(const std::string& path) {
  try {
    return instance_from_string(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void instance_save(const Instance& inst, const std::string& path) {
  write_file(path, instance_to_string(inst));
}

std::string class_to_string(const ClassSpec& cls) {
  std::ostringstream out;
  out << "[class]\n";
  out << "kind = " << (cls.kind == ClassSpec::Kind::finite ? "finite" : "linear") << "\n";
  out << "prompts = " << cls.prompts << "\n";
  out << "actions =";
  for (int k : cls.actions.counts) out << ' ' << k;
  out << "\n";
  if (cls.kind == ClassSpec::Kind::finite) {
    out << "members = " << cls.finite.size() << "\n";
    out << "realizable = " << (cls.finite.realizable ? 1 : 0) << "\n";
    for (int j = 0; j < cls.finite.size(); ++j) {
      out << "\n[member " << j << "]\n";
      for (int x = 0; x < cls.prompts; ++x) {
        out << "upper " << x << " = " << upper_to_string(cls.finite.members[j], x) << "\n";
      }
    }
  } else {
    out << "dim = " << cls.linear.dim << "\n";
    out << "bound = " << format_double(cls.linear.bound) << "\n";
    out << "\n[features]\n";
    for (int x = 0; x < cls.prompts; ++x) {
      for (int a = 0; a < cls.actions.counts[x]; ++a) {
        out << "phi " << x << ' ' << a << " =";
        const Eigen::VectorXd& phi = cls.linear.features[x][a];
        for (int i = 0; i < phi.size(); ++i) out << ' ' << format_double(phi[i]);
        out << "\n";
      }
    }
  }
  return out.str();
}

ClassSpec class_from_string(const std::string& text) {
  const std::vector<IniSection> secs = parse_sections(text);
  if (secs.empty() || secs[0].name != "class") {
    throw ParseError("class: first section must be [class]");
  }
  auto by_name = index_sections(secs);

  SectionReader head(*by_name.at("class"));
  ClassSpec cls;
  const std::string kind = head.get("kind");
  cls.prompts = static_cast<int>(parse_int(head.get("prompts"), "prompts"));
  cls.actions.counts = parse_int_list(head.get("actions"), "actions");
  if (cls.prompts < 1) throw ParseError("class: prompts must be >= 1");
  if (static_cast<int>(cls.actions.counts.size()) != cls.prompts) {
    throw ParseError("class: actions list length must equal prompts");
  }
  for (int k : cls.actions.counts) {
    if (k < 2) throw ParseError("class: every prompt needs at least 2 actions");
  }

  if (kind == "finite") {
    cls.kind = ClassSpec::Kind::finite;
    const int members = static_cast<int>(parse_int(head.get("members"), "members"));
    cls.finite.realizable = parse_int(head.get("realizable"), "realizable") != 0;
    head.finish();
    if (members < 1) throw ParseError("class: members must be >= 1");
    expect_section_count(secs, 1 + static_cast<std::size_t>(members), "class");
    for (int j = 0; j < members; ++j) {
      const std::string name = "member " + std::to_string(j);
      auto it = by_name.find(name);
      if (it == by_name.end()) throw ParseError("class: missing section [" + name + "]");
      SectionReader sec(*it->second);
      PreferenceFunction P(cls.actions);
      for (int x = 0; x < cls.prompts; ++x) {
        const std::string key = "upper " + std::to_string(x);
        assign_upper(P, x, read_upper_row(sec.get(key), cls.actions.counts[x], name));
      }
      sec.finish();
      cls.finite.members.push_back(std::move(P));
    }
  } else if (kind == "linear") {
    cls.kind = ClassSpec::Kind::linear;
    cls.linear.dim = static_cast<int>(parse_int(head.get("dim"), "dim"));
    cls.linear.bound = parse_double(head.get("bound"), "bound");
    head.finish();
    expect_section_count(secs, 2, "class");
    auto it = by_name.find("features");
    if (it == by_name.end()) throw ParseError("class: missing section [features]");
    SectionReader sec(*it->second);
    cls.linear.features.resize(cls.prompts);
    for (int x = 0; x < cls.prompts; ++x) {
      cls.linear.features[x].resize(cls.actions.counts[x]);
      for (int a = 0; a < cls.actions.counts[x]; ++a) {
        const std::string key = "phi " + std::to_string(x) + ' ' + std::to_string(a);
        std::vector<double> vals = parse_double_list(sec.get(key), key);
        if (static_cast<int>(vals.size()) != cls.linear.dim) {
          throw ParseError("class: feature length mismatch at '" + key + "'");
        }
        cls.linear.features[x][a] =
            Eigen::Map<const Eigen::VectorXd>(vals.data(), cls.linear.dim);
      }
    }
    sec.finish();
    cls.linear.validate();
  } else {
    throw ParseError("class: unknown kind '" + kind + "'");
  }
  return cls;
}

ClassSpec class_load(const std::string& path) {
  try {
    return class_from_string(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void class_save(const ClassSpec& cls, const std::string& path) {
  write_file(path, class_to_string(cls));
}

RewardTable rewards_from_string(const std::string& text) {
  const std::vector<IniSection> secs = parse_sections(text);
  expect_section_count(secs, 1, "rewards");
  if (secs[0].name != "rewards") throw ParseError("rewards: expected section [rewards]");
  SectionReader sec(secs[0]);
  const int nx = static_cast<int>(parse_int(sec.get("prompts"), "prompts"));
  if (nx < 1) throw ParseError("rewards: prompts must be >= 1");
  RewardTable table;
  table.values.resize(nx);
  for (int x = 0; x < nx; ++x) {
    const std::string key = "r " + std::to_string(x);
    table.values[x] = parse_double_list(sec.get(key), key);
    if (table.values[x].empty()) throw ParseError("rewards: empty row '" + key + "'");
  }
  sec.finish();
  return table;
}

RewardTable rewards_load(const std::string& path) {
  try {
    return rewards_from_string(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string table_to_string(const PreferenceFunction& P) {
  std::ostringstream out;
  out << "[table]\n";
  out << "prompts = " << P.prompts() << "\n";
  out << "actions =";
  for (int x = 0; x < P.prompts(); ++x) out << ' ' << P.actions(x);
  out << "\n";
  for (int x = 0; x < P.prompts(); ++x) {
    out << "\n[pref " << x << "]\n";
    out << "upper = " << upper_to_string(P, x) << "\n";
  }
  return out.str();
}

PreferenceFunction table_from_string(const std::string& text) {
  const std::vector<IniSection> secs = parse_sections(text);
  if (secs.empty() || secs[0].name != "table") {
    throw ParseError("table: first section must be [table]");
  }
  auto by_name = index_sections(secs);
  SectionReader head(*by_name.at("table"));
  const int nx = static_cast<int>(parse_int(head.get("prompts"), "prompts"));
  ActionSpace actions;
  actions.counts = parse_int_list(head.get("actions"), "actions");
  head.finish();
  if (nx < 1 || static_cast<int>(actions.counts.size()) != nx) {
    throw ParseError("table: prompts/actions mismatch");
  }
  expect_section_count(secs, 1 + static_cast<std::size_t>(nx), "table");
  PreferenceFunction P(actions);
  for (int x = 0; x < nx; ++x) {
    const std::string name = "pref " + std::to_string(x);
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ParseError("table: missing section [" + name + "]");
    SectionReader sec(*it->second);
    assign_upper(P, x, read_upper_row(sec.get("upper"), actions.counts[x], name));
    sec.finish();
  }
  return P;
}

PreferenceFunction table_load(const std::string& path) {
  try {
    return table_from_string(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

PreferenceFunction resolve_oracle(const std::string& spec, const Instance& inst) {
  PreferenceFunction oracle;
  if (spec == "instance") {
    oracle = inst.pref;
  } else if (spec.rfind("cyclic:", 0) == 0) {
    if (inst.cfg.prompts.size() != 1) {
      throw InvalidArgument("oracle spec 'cyclic' needs a single-prompt instance");
    }
    const double w = parse_double(spec.substr(7), "cyclic strength");
    oracle = cyclic_oracle(inst.cfg.actions.counts[0], w);
  } else if (spec.rfind("bt:", 0) == 0) {
    oracle = bt_oracle(rewards_load(spec.substr(3)));
  } else if (spec.rfind("table:", 0) == 0) {
    oracle = table_load(spec.substr(6));
  } else {
    throw ParseError("unknown oracle spec '" + spec + "'");
  }
  check_pref_shape(inst.cfg, oracle, "oracle");
  return oracle;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw IoError("read failure: " + path);
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("write failure: " + path);
}

}  // namespace prefgame
