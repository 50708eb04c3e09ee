#include "freespectra/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "freespectra/error.hpp"
#include "freespectra/matrix_io.hpp"
#include "freespectra/ncalg.hpp"

namespace fsp {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  int key_col = 0;
  int value_col = 0;
  bool used = false;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, Entry>> entries;

  Entry* find(const std::string& key) {
    for (auto& [k, e] : entries) {
      if (k == key) return &e;
    }
    return nullptr;
  }
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.emplace_back(trim(item));
  return out;
}

double to_double(const Entry& e, const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || text.empty()) {
    throw ParseError("'" + key + "' expects a number, got '" + text + "'", e.line, e.value_col);
  }
  return v;
}

template <class Int>
Int to_int(const Entry& e, const std::string& key, const std::string& text) {
  Int v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || text.empty()) {
    throw ParseError("'" + key + "' expects an integer, got '" + text + "'", e.line, e.value_col);
  }
  return v;
}

bool to_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  throw ParseError("'" + key + "' expects true or false", e.line, e.value_col);
}

void require(bool ok, const Entry& e, const std::string& message) {
  if (!ok) throw ParseError(message, e.line, e.value_col);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
  return out;
}

}  // namespace

nlohmann::json Defaults::table() {
  return {{"solver_tol", solver_tol},
          {"max_iter", max_iter},
          {"damping_min", damping_min},
          {"continuation_start", continuation_start},
          {"eps", eps},
          {"threshold", threshold},
          {"trials", trials},
          {"n", n},
          {"seed", seed},
          {"margin", margin},
          {"delta", delta},
          {"norm_tolerance", norm_tolerance},
          {"ks_tolerance", ks_tolerance},
          {"moment_tolerance", moment_tolerance}};
}

RunConfig parse_config(std::string_view text) {
  std::vector<Section> sections;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    // Comments: whole lines starting with # or ;, and " #" tails.
    std::string_view line = raw;
    if (const auto hash = line.find(" #"); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#' || body.front() == ';') continue;
    const int indent = static_cast<int>(line.find_first_not_of(" \t")) + 1;

    if (body.front() == '[') {
      if (body.back() != ']') throw ParseError("unterminated section header", line_no, indent);
      std::string name(trim(body.substr(1, body.size() - 2)));
      const bool known = name == "run" || name == "model" || name == "wigner" || name == "solver" ||
                         (name.rfind("det.a", 0) == 0 && name.size() > 5 &&
                          std::all_of(name.begin() + 5, name.end(), [](char c) { return c >= '0' && c <= '9'; }));
      if (!known) throw ParseError("unknown section [" + name + "]", line_no, indent + 1);
      for (const auto& s : sections) {
        if (s.name == name) throw ParseError("duplicate section [" + name + "]", line_no, indent + 1);
      }
      sections.push_back({name, line_no, {}});
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no, indent);
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError("missing key before '='", line_no, indent);
    if (sections.empty()) throw ParseError("key '" + key + "' outside any section", line_no, indent);
    const auto after = line.substr(eq + 1);
    const auto vstart = after.find_first_not_of(" \t");
    const int value_col = static_cast<int>(eq + 1 + (vstart == std::string_view::npos ? 0 : vstart)) + 1;
    Section& sec = sections.back();
    if (sec.find(key) != nullptr) {
      throw ParseError("duplicate key '" + key + "' in [" + sec.name + "]", line_no, indent);
    }
    sec.entries.push_back({key, Entry{std::string(trim(after)), line_no, indent, value_col, false}});
  }
  const int end_line = line_no;

  auto section = [&](const std::string& name) -> Section* {
    for (auto& s : sections) {
      if (s.name == name) return &s;
    }
    return nullptr;
  };
  auto get = [&](const std::string& sec, const std::string& key) -> Entry* {
    Section* s = section(sec);
    if (s == nullptr) return nullptr;
    Entry* e = s->find(key);
    if (e != nullptr) e->used = true;
    return e;
  };
  auto missing = [&](const std::string& sec, const std::string& key) {
    Section* s = section(sec);
    return ParseError("missing required key '" + key + "' in [" + sec + "]", s ? s->line : end_line, 1);
  };

  RunConfig cfg;

  // [run]
  if (Entry* e = get("run", "command")) {
    cfg.command = e->value;
    const auto& cmds = known_commands();
    require(std::find(cmds.begin(), cmds.end(), cfg.command) != cmds.end(), *e,
            "unknown command '" + cfg.command + "'");
  } else {
    throw missing("run", "command");
  }
  auto positive = [&](const std::string& sec, const std::string& key, double& target) {
    if (Entry* e = get(sec, key)) {
      target = to_double(*e, key, e->value);
      require(target > 0.0, *e, "'" + key + "' must be positive");
    }
  };
  positive("run", "eps", cfg.eps);
  positive("run", "threshold", cfg.threshold);
  positive("run", "margin", cfg.margin);
  positive("run", "delta", cfg.delta);
  positive("run", "tolerance", cfg.tolerance);
  positive("run", "ks_tolerance", cfg.ks_tolerance);
  positive("run", "moment_tolerance", cfg.moment_tolerance);
  if (Entry* e = get("run", "gap"); e && e->value != "auto") {
    const auto parts = split_list(e->value);
    require(parts.size() == 2, *e, "'gap' expects 'b, c' or 'auto'");
    cfg.gap = std::make_pair(to_double(*e, "gap", parts[0]), to_double(*e, "gap", parts[1]));
    require(cfg.gap->first <= cfg.gap->second, *e, "'gap' needs b <= c");
  }
  if (Entry* e = get("run", "grid"); e && e->value != "auto") {
    const auto parts = split_list(e->value);
    require(parts.size() == 3, *e, "'grid' expects 'min, max, step' or 'auto'");
    std::vector<double> g;
    for (const auto& p : parts) g.push_back(to_double(*e, "grid", p));
    require(g[0] < g[1] && g[2] > 0.0, *e, "'grid' needs min < max and step > 0");
    cfg.grid = g;
  }
  if (Entry* e = get("run", "output")) {
    require(!e->value.empty() && e->value.find('/') == std::string::npos, *e, "'output' must be a plain file stem");
    cfg.output = e->value;
  }

  // [model]
  if (Entry* e = get("model", "r")) {
    cfg.r = to_int<int>(*e, "r", e->value);
    require(cfg.r >= 0, *e, "'r' must be nonnegative");
  }
  if (Entry* e = get("model", "t")) {
    cfg.t = to_int<int>(*e, "t", e->value);
    require(cfg.t >= 0, *e, "'t' must be nonnegative");
  }
  if (Entry* e = get("model", "model_n")) {
    cfg.model_n = to_int<int>(*e, "model_n", e->value);
    require(cfg.model_n >= 0, *e, "'model_n' must be nonnegative");
  }
  if (Entry* e = get("model", "model_file"); e && e->value != "none") cfg.model_file = e->value;
  if (Entry* e = get("model", "poly"); e && e->value != "none") {
    cfg.polynomial = e->value;
    try {
      (void)parse_polynomial(cfg.polynomial, cfg.r, cfg.t);
    } catch (const ParseError& err) {
      throw ParseError(std::string("malformed polynomial: ") + err.what(), e->line, e->value_col + err.column() - 1);
    }
  }
  if (cfg.polynomial.empty() && cfg.model_file.empty()) throw missing("model", "poly");

  // [det.aK]
  for (auto& s : sections) {
    if (s.name.rfind("det.a", 0) != 0) continue;
    const int k = std::stoi(s.name.substr(5));
    if (k < 1 || k > cfg.t) {
      throw ParseError("section [" + s.name + "] names an undeclared generator (t = " + std::to_string(cfg.t) + ")",
                       s.line, 1);
    }
  }
  for (int k = 1; k <= cfg.t; ++k) {
    const std::string name = "det.a" + std::to_string(k);
    if (section(name) == nullptr) throw ParseError("missing section [" + name + "]", end_line, 1);
    Entry* kind = get(name, "kind");
    if (kind == nullptr) throw missing(name, "kind");
    auto needed = [&](const std::string& key) {
      Entry* e = get(name, key);
      if (e == nullptr) throw missing(name, key);
      return e;
    };
    auto numbers = [&](Entry* e, const std::string& key) {
      std::vector<double> v;
      for (const auto& p : split_list(e->value)) v.push_back(to_double(*e, key, p));
      require(!v.empty(), *e, "'" + key + "' needs at least one value");
      return v;
    };
    if (kind->value == "diag") {
      cfg.dets.push_back(DetSpec::diag(numbers(needed("values"), "values")));
    } else if (kind->value == "toeplitz") {
      cfg.dets.push_back(DetSpec::toeplitz(numbers(needed("values"), "values")));
    } else if (kind->value == "projection") {
      Entry* e = needed("fraction");
      const double f = to_double(*e, "fraction", e->value);
      require(f >= 0.0 && f <= 1.0, *e, "'fraction' must lie in [0, 1]");
      cfg.dets.push_back(DetSpec::projection(f));
    } else if (kind->value == "file") {
      cfg.dets.push_back(DetSpec::file(needed("path")->value));
    } else {
      require(false, *kind, "unknown kind '" + kind->value + "' (expected diag, projection, toeplitz or file)");
    }
  }

  // [wigner]
  if (Entry* e = get("wigner", "law")) {
    try {
      cfg.law = EntryLaw::from_string(e->value);
    } catch (const std::exception& err) {
      throw ParseError(err.what(), e->line, e->value_col);
    }
  }
  if (Entry* e = get("wigner", "truncation"); e && e->value != "none") {
    cfg.truncation = to_double(*e, "truncation", e->value);
    require(*cfg.truncation > 0.0, *e, "'truncation' must be positive");
  }
  if (Entry* e = get("wigner", "convolution")) {
    cfg.convolution = to_double(*e, "convolution", e->value);
    require(cfg.convolution >= 0.0, *e, "'convolution' must be nonnegative");
  }
  if (Entry* e = get("wigner", "n")) {
    cfg.ns.clear();
    for (const auto& p : split_list(e->value)) {
      cfg.ns.push_back(to_int<int>(*e, "n", p));
      require(cfg.ns.back() >= 1, *e, "'n' values must be positive");
    }
    require(!cfg.ns.empty(), *e, "'n' needs at least one value");
  }
  if (Entry* e = get("wigner", "trials")) {
    cfg.trials = to_int<int>(*e, "trials", e->value);
    require(cfg.trials >= 1, *e, "'trials' must be at least 1");
  }
  if (Entry* e = get("wigner", "seed")) cfg.seed = to_int<std::uint64_t>(*e, "seed", e->value);

  // [solver]
  positive("solver", "tol", cfg.solver.tol);
  positive("solver", "continuation_start", cfg.solver.continuation_start);
  if (Entry* e = get("solver", "max_iter")) {
    cfg.solver.max_iter = to_int<int>(*e, "max_iter", e->value);
    require(cfg.solver.max_iter >= 1, *e, "'max_iter' must be at least 1");
  }
  if (Entry* e = get("solver", "damping_min")) {
    cfg.solver.damping_min = to_double(*e, "damping_min", e->value);
    require(cfg.solver.damping_min > 0.0 && cfg.solver.damping_min <= 1.0, *e, "'damping_min' must lie in (0, 1]");
  }
  if (Entry* e = get("solver", "newton")) cfg.solver.use_newton = to_bool(*e, "newton");

  // Anything not consumed above is unknown.
  for (const auto& s : sections) {
    for (const auto& [k, e] : s.entries) {
      if (!e.used) throw ParseError("unknown key '" + k + "' in [" + s.name + "]", e.line, e.key_col);
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[run]\n"
     << "command = " << cfg.command << '\n'
     << "eps = " << format_double(cfg.eps) << '\n'
     << "threshold = " << format_double(cfg.threshold) << '\n'
     << "margin = " << format_double(cfg.margin) << '\n'
     << "delta = " << format_double(cfg.delta) << '\n'
     << "gap = " << (cfg.gap ? join({cfg.gap->first, cfg.gap->second}) : "auto") << '\n'
     << "grid = " << (cfg.grid ? join(*cfg.grid) : "auto") << '\n'
     << "tolerance = " << format_double(cfg.tolerance) << '\n'
     << "ks_tolerance = " << format_double(cfg.ks_tolerance) << '\n'
     << "moment_tolerance = " << format_double(cfg.moment_tolerance) << '\n'
     << "output = " << cfg.output << "\n\n";
  os << "[model]\n"
     << "poly = " << (cfg.polynomial.empty() ? "none" : cfg.polynomial) << '\n'
     << "r = " << cfg.r << '\n'
     << "t = " << cfg.t << '\n'
     << "model_file = " << (cfg.model_file.empty() ? "none" : cfg.model_file) << '\n'
     << "model_n = " << cfg.model_n << "\n\n";
  for (std::size_t k = 0; k < cfg.dets.size(); ++k) {
    const DetSpec& d = cfg.dets[k];
    os << "[det.a" << k + 1 << "]\n";
    switch (d.kind) {
      case DetSpec::Kind::diag_spec: os << "kind = diag\nvalues = " << join(d.values) << '\n'; break;
      case DetSpec::Kind::toeplitz: os << "kind = toeplitz\nvalues = " << join(d.values) << '\n'; break;
      case DetSpec::Kind::projection: os << "kind = projection\nfraction = " << format_double(d.fraction) << '\n'; break;
      case DetSpec::Kind::from_file: os << "kind = file\npath = " << d.path.string() << '\n'; break;
    }
    os << '\n';
  }
  os << "[wigner]\n"
     << "law = " << cfg.law.to_string() << '\n'
     << "truncation = " << (cfg.truncation ? format_double(*cfg.truncation) : "none") << '\n'
     << "convolution = " << format_double(cfg.convolution) << '\n'
     << "n = ";
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) os << (i ? ", " : "") << cfg.ns[i];
  os << '\n'
     << "trials = " << cfg.trials << '\n'
     << "seed = " << cfg.seed << "\n\n";
  os << "[solver]\n"
     << "tol = " << format_double(cfg.solver.tol) << '\n'
     << "max_iter = " << cfg.solver.max_iter << '\n'
     << "damping_min = " << format_double(cfg.solver.damping_min) << '\n'
     << "continuation_start = " << format_double(cfg.solver.continuation_start) << '\n'
     << "newton = " << (cfg.solver.use_newton ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace fsp
