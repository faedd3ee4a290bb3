#include "noisesearch/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace noisesearch {

std::string_view run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::Search: return "search";
    case RunMode::Greedy: return "greedy";
    case RunMode::BestOfN: return "best_of_n";
  }
  return "search";
}

RunMode parse_run_mode(std::string_view name) {
  if (name == "search") return RunMode::Search;
  if (name == "greedy") return RunMode::Greedy;
  if (name == "best_of_n") return RunMode::BestOfN;
  throw ConfigError("unknown run mode: " + std::string(name));
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <class T>
T parse_number(std::string_view s, std::string_view key) {
  s = trim(s);
  T v{};
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end)
    throw ConfigError("invalid value for " + std::string(key) + ": '" + std::string(s) + "'");
  return v;
}

double parse_real(std::string_view s, std::string_view key) {
  const double v = parse_number<double>(s, key);
  if (!std::isfinite(v)) throw ConfigError("non-finite value for " + std::string(key));
  return v;
}

bool parse_bool(std::string_view s, std::string_view key) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("invalid boolean for " + std::string(key) + ": '" + std::string(s) + "'");
}

std::string fmt_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

// Wraps parse errors of the enum parsers into ConfigError.
template <class Fn>
auto parse_enum(Fn&& fn, std::string_view s) {
  try {
    return fn(trim(s));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

struct Entry {
  std::string key;
  bool fingerprinted;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

SubjectSpec& subject_of(RunConfig& c) { return c.subject; }

std::string subject_field(const RunConfig& c, const std::function<std::string(const SubjectSpec&)>& f) {
  return f(c.subject);
}

#define NS_SIZE(KEY, EXPR)                                                                                \
  Entry{KEY, true, [](RunConfig& c, std::string_view v) { EXPR = parse_number<std::size_t>(v, KEY); }, \
        [](const RunConfig& c) { return std::to_string(EXPR); }}
#define NS_REAL(KEY, EXPR)                                                                      \
  Entry{KEY, true, [](RunConfig& c, std::string_view v) { EXPR = parse_real(v, KEY); }, \
        [](const RunConfig& c) { return fmt_real(EXPR); }}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    // [search]
    t.push_back({"search.paradigm", true,
                 [](RunConfig& c, std::string_view v) { c.search.paradigm = parse_enum(parse_paradigm, v); },
                 [](const RunConfig& c) { return std::string(paradigm_name(c.search.paradigm)); }});
    t.push_back(NS_SIZE("search.beam_k", c.search.beam_k));
    t.push_back(NS_SIZE("search.cands_n", c.search.cands_n));
    t.push_back(NS_SIZE("search.steps", c.search.steps));
    t.push_back({"search.reward", true,
                 [](RunConfig& c, std::string_view v) { c.search.reward = parse_enum(parse_reward, v); },
                 [](const RunConfig& c) { return std::string(reward_name(c.search.reward)); }});
    t.push_back(NS_SIZE("search.anchor_lag", c.search.anchor_lag));
    t.push_back(NS_SIZE("search.overlap", c.search.overlap));
    t.push_back({"search.threads", false,
                 [](RunConfig& c, std::string_view v) { c.search.threads = parse_number<std::size_t>(v, "search.threads"); },
                 [](const RunConfig& c) { return std::to_string(c.search.threads); }});
    // [pool]
    t.push_back({"pool.mix", true,
                 [](RunConfig& c, std::string_view v) {
                   const auto parts = split(v, ',');
                   if (parts.size() != kStrategyCount) throw ConfigError("pool.mix needs four comma-separated weights");
                   for (std::size_t i = 0; i < kStrategyCount; ++i) c.search.pool.mix[i] = parse_real(parts[i], "pool.mix");
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < kStrategyCount; ++i) s += (i ? "," : "") + fmt_real(c.search.pool.mix[i]);
                   return s;
                 }});
    t.push_back(NS_REAL("pool.fft_r", c.search.pool.fft_cutoff));
    t.push_back({"pool.fft_mode", true,
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "2d") c.search.pool.fft_mode = FftMode::Spatial2D;
                   else if (v == "3d") c.search.pool.fft_mode = FftMode::SpatioTemporal3D;
                   else throw ConfigError("pool.fft_mode must be 2d or 3d");
                 },
                 [](const RunConfig& c) { return std::string(c.search.pool.fft_mode == FftMode::Spatial2D ? "2d" : "3d"); }});
    t.push_back(NS_REAL("pool.delta", c.search.pool.delta));
    // [schedule]
    t.push_back({"schedule.total_steps", true,
                 [](RunConfig& c, std::string_view v) { c.schedule.total_steps = parse_number<int>(v, "schedule.total_steps"); },
                 [](const RunConfig& c) { return std::to_string(c.schedule.total_steps); }});
    t.push_back({"schedule.ddim_steps", true,
                 [](RunConfig& c, std::string_view v) { c.schedule.ddim_steps = parse_number<int>(v, "schedule.ddim_steps"); },
                 [](const RunConfig& c) { return std::to_string(c.schedule.ddim_steps); }});
    t.push_back(NS_REAL("schedule.beta_min", c.schedule.beta_min));
    t.push_back(NS_REAL("schedule.beta_max", c.schedule.beta_max));
    // [world]
    t.push_back(NS_SIZE("world.height", c.search.height));
    t.push_back(NS_SIZE("world.width", c.search.width));
    t.push_back(NS_SIZE("world.window", c.search.window));
    t.push_back(NS_SIZE("world.partitions", c.search.partitions));
    t.push_back(NS_SIZE("world.families", c.corpus.families));
    t.push_back(NS_SIZE("world.cut_variants", c.corpus.cut_variants));
    t.push_back(NS_SIZE("world.glitch_variants", c.corpus.glitch_variants));
    t.push_back(NS_SIZE("world.drift_variants", c.corpus.drift_variants));
    t.push_back(NS_SIZE("world.corpus_frames", c.corpus.frames));
    t.push_back(NS_SIZE("world.glitch_length", c.corpus.glitch_length));
    t.push_back(NS_REAL("world.speed", c.corpus.speed));
    t.push_back(NS_REAL("world.pixel_noise", c.corpus.pixel_noise));
    t.push_back({"world.corpus_seed", true,
                 [](RunConfig& c, std::string_view v) { c.corpus_seed = parse_number<std::uint64_t>(v, "world.corpus_seed"); },
                 [](const RunConfig& c) { return std::to_string(c.corpus_seed); }});
    t.push_back({"world.corpus", true, [](RunConfig& c, std::string_view v) { c.corpus_path = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.corpus_path; }});
    // [subject]
    t.push_back({"subject.kind", true,
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "none") {
                     c.use_subject = false;
                   } else if (v == "square" || v == "disc") {
                     c.use_subject = true;
                     c.subject.kind = v == "square" ? ShapeKind::Square : ShapeKind::Disc;
                   } else {
                     throw ConfigError("subject.kind must be none, square or disc");
                   }
                 },
                 [](const RunConfig& c) {
                   if (!c.use_subject) return std::string("none");
                   return std::string(c.subject.kind == ShapeKind::Square ? "square" : "disc");
                 }});
    auto subject_int = [](std::string key, int SubjectSpec::*field) {
      return Entry{key, true,
                   [key, field](RunConfig& c, std::string_view v) { subject_of(c).*field = parse_number<int>(v, key); },
                   [field](const RunConfig& c) {
                     return subject_field(c, [field](const SubjectSpec& s) { return std::to_string(s.*field); });
                   }};
    };
    auto subject_real = [](std::string key, double SubjectSpec::*field) {
      return Entry{key, true,
                   [key, field](RunConfig& c, std::string_view v) { subject_of(c).*field = parse_real(v, key); },
                   [field](const RunConfig& c) {
                     return subject_field(c, [field](const SubjectSpec& s) { return fmt_real(s.*field); });
                   }};
    };
    t.push_back(subject_int("subject.size", &SubjectSpec::size));
    t.push_back(subject_real("subject.intensity", &SubjectSpec::intensity));
    t.push_back(subject_int("subject.row", &SubjectSpec::row));
    t.push_back(subject_int("subject.col", &SubjectSpec::col));
    t.push_back(subject_real("subject.d_row", &SubjectSpec::d_row));
    t.push_back(subject_real("subject.d_col", &SubjectSpec::d_col));
    t.push_back(subject_real("subject.background", &SubjectSpec::background));
    // [run]
    t.push_back({"run.mode", true, [](RunConfig& c, std::string_view v) { c.mode = parse_run_mode(trim(v)); },
                 [](const RunConfig& c) { return std::string(run_mode_name(c.mode)); }});
    t.push_back(NS_SIZE("run.best_of_n", c.best_of_n));
    t.push_back({"run.seeds", true, [](RunConfig& c, std::string_view v) { c.seeds = parse_seed_list(v); },
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.seeds.size(); ++i) s += (i ? "," : "") + std::to_string(c.seeds[i]);
                   return s;
                 }});
    t.push_back({"run.out", false, [](RunConfig& c, std::string_view v) { c.out = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.out; }});
    t.push_back({"run.export_frames", false,
                 [](RunConfig& c, std::string_view v) { c.export_frames = parse_bool(v, "run.export_frames"); },
                 [](const RunConfig& c) { return fmt_bool(c.export_frames); }});
    t.push_back({"run.save_tensors", false,
                 [](RunConfig& c, std::string_view v) { c.save_tensors = parse_bool(v, "run.save_tensors"); },
                 [](const RunConfig& c) { return fmt_bool(c.save_tensors); }});
    t.push_back({"run.trace", false,
                 [](RunConfig& c, std::string_view v) { c.write_trace = parse_bool(v, "run.trace"); },
                 [](const RunConfig& c) { return fmt_bool(c.write_trace); }});
    return t;
  }();
  return table;
}

#undef NS_SIZE
#undef NS_REAL

const Entry& find_entry(std::string_view key) {
  for (const Entry& e : entries())
    if (e.key == key) return e;
  throw ConfigError("unknown config key: " + std::string(key));
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (std::string_view part : split(text, ',')) {
    if (part.empty()) throw ConfigError("empty entry in seed list");
    const auto dash = part.find('-');
    if (dash == std::string_view::npos) {
      seeds.push_back(parse_number<std::uint64_t>(part, "run.seeds"));
      continue;
    }
    const auto lo = parse_number<std::uint64_t>(part.substr(0, dash), "run.seeds");
    const auto hi = parse_number<std::uint64_t>(part.substr(dash + 1), "run.seeds");
    if (hi < lo) throw ConfigError("descending seed range: " + std::string(part));
    if (hi - lo >= 1000000) throw ConfigError("seed range too long: " + std::string(part));
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Entry& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& cfg, std::string_view qualified_key, std::string_view value) {
  find_entry(qualified_key).set(cfg, value);
}

std::string get_config_value(const RunConfig& cfg, std::string_view qualified_key) {
  return find_entry(qualified_key).get(cfg);
}

void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::string section;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      const bool known = std::any_of(entries().begin(), entries().end(),
                                     [&](const Entry& e) { return e.key.rfind(section + ".", 0) == 0; });
      if (!known) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key " + key);
    try {
      set_config_value(cfg, key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg;
  apply_config_text(cfg, buf.str());
  return cfg;
}

std::string config_to_text(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const Entry& e : entries()) {
    const auto dot = e.key.find('.');
    const std::string sec = e.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += e.key.substr(dot + 1) + " = " + e.get(cfg) + "\n";
  }
  return out;
}

std::string config_fingerprint(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  for (const Entry& e : entries()) {
    if (!e.fingerprinted) continue;
    // shape parameters of a disabled subject have no effect
    if (!cfg.use_subject && e.key.starts_with("subject.") && e.key != "subject.kind") continue;
    feed(e.key);
    feed("=");
    feed(e.get(cfg));
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  if (seeds.empty()) throw ConfigError("run.seeds must not be empty");
  if (mode == RunMode::BestOfN && best_of_n < 1) throw ConfigError("run.best_of_n must be >= 1");
  const NoiseSchedule sched = make_noise_schedule();
  try {
    search_config(seeds.front()).validate(sched);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (corpus_path.empty()) {
    if (corpus.families < 1 || corpus.frames < 1) throw ConfigError("world corpus must be non-empty");
    if (!(corpus.speed >= 0.0)) throw ConfigError("world.speed must be non-negative");
  }
}

NoiseSchedule RunConfig::make_noise_schedule() const {
  try {
    return make_schedule(schedule.total_steps, schedule.ddim_steps, schedule.beta_min, schedule.beta_max);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

CorpusParams RunConfig::corpus_params() const {
  CorpusParams p = corpus;
  p.height = search.height;
  p.width = search.width;
  return p;
}

SearchConfig RunConfig::search_config(std::uint64_t seed) const {
  SearchConfig c = search;
  c.seed = seed;
  c.subject = use_subject ? std::optional<SubjectSpec>(subject) : std::nullopt;
  return c;
}

}  // namespace noisesearch
