// SPDX-License-Identifier: Apache-2.0
#include "wbft/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace wbft {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_targets(const std::string& tok, std::vector<std::uint32_t>& out) {
  for (const auto& part : split_on(tok, ',')) {
    std::string p = trim(part);
    if (p.empty()) return false;
    if (p == "leader") {
      out.push_back(kLeaderToken);
      continue;
    }
    try {
      out.push_back(static_cast<std::uint32_t>(std::stoul(p)));
    } catch (...) {
      return false;
    }
  }
  return true;
}

bool parse_fault(const std::string& value, int line, FaultDirective& d,
                 std::vector<std::string>& errors) {
  auto err = [&](const std::string& what) {
    errors.push_back("line " + std::to_string(line) + ": " + what);
    return false;
  };
  auto toks = split_ws(value);
  if (toks.size() < 2) return err("fault needs '<time_ms> <kind> ...'");
  d.line = line;
  try {
    d.at = ms_to_ns(std::stod(toks[0]));
  } catch (...) {
    return err("bad fault time '" + toks[0] + "'");
  }

  std::size_t i = 2;
  auto tail_until = [&]() {
    for (; i < toks.size(); ++i) {
      if (toks[i].rfind("until=", 0) == 0) {
        try {
          d.until = ms_to_ns(std::stod(toks[i].substr(6)));
        } catch (...) {
          return err("bad until= value");
        }
      } else {
        return err("unexpected token '" + toks[i] + "'");
      }
    }
    return true;
  };

  const std::string& kind = toks[1];
  if (kind == "crash" || kind == "silent" || kind == "equivocate") {
    d.kind = kind == "crash" ? FaultDirective::Kind::crash
             : kind == "silent" ? FaultDirective::Kind::silent
                                : FaultDirective::Kind::equivocate;
    if (toks.size() < 3) return err(kind + " needs a target list");
    if (!parse_targets(toks[2], d.targets)) return err("bad target list '" + toks[2] + "'");
    i = 3;
    return tail_until();
  }
  if (kind == "slow_link" || kind == "drop") {
    d.kind = kind == "slow_link" ? FaultDirective::Kind::slow_link : FaultDirective::Kind::drop;
    std::size_t base = 2;
    if (kind == "slow_link") {
      if (toks.size() < 5) return err("slow_link needs '<factor> <from> <to>'");
      try {
        d.factor = std::stod(toks[2]);
      } catch (...) {
        return err("bad slow_link factor");
      }
      if (d.factor <= 0) return err("slow_link factor must be positive");
      base = 3;
    } else if (toks.size() < 4) {
      return err("drop needs '<from> <to>'");
    }
    auto endpoint = [&](const std::string& tok, std::int64_t& out) {
      if (tok == "*") {
        out = -1;
        return true;
      }
      try {
        out = std::stol(tok);
        return out >= 0;
      } catch (...) {
        return false;
      }
    };
    if (!endpoint(toks[base], d.from)) return err("bad link endpoint '" + toks[base] + "'");
    if (!endpoint(toks[base + 1], d.to)) return err("bad link endpoint '" + toks[base + 1] + "'");
    i = base + 2;
    return tail_until();
  }
  return err("unknown fault kind '" + kind + "'");
}

}  // namespace

std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> problems;
  auto bad = [&](const std::string& s) { problems.push_back(s); };

  if (n < 4) bad("n must be at least 4");
  if (t == 0 || n < 3 * t + 1) bad("resilience infeasible: need n >= 3t+1");
  if (matrix.size() < n) bad("latency matrix smaller than n");
  auto merr = matrix.validate();
  if (!merr.empty()) bad("matrix: " + merr);
  if (theta == 0) bad("theta must be positive");
  if (checkpoint_k == 0) bad("checkpoint_k must be positive");
  if (reopt_interval == 0) bad("reopt_interval must be positive");
  if (client_regions.empty()) bad("at least one client required");
  for (auto r : client_regions)
    if (r >= matrix.size()) bad("client region " + std::to_string(r) + " out of range");
  if (requests_per_client == 0) bad("requests_per_client must be positive");
  if (duration <= 0) bad("duration must be positive");
  if (weights == WeightScheme::egalitarian && variant == Variant::flash)
    bad("egalitarian weights require variant = conservative_only");
  if (jitter_sigma < 0) bad("jitter_sigma must be non-negative");

  std::uint32_t procs = n + static_cast<std::uint32_t>(client_regions.size());
  for (const auto& f : faults) {
    std::string where = "fault (line " + std::to_string(f.line) + ")";
    if (f.at < 0) bad(where + ": negative time");
    if (f.until >= 0 && f.until <= f.at) bad(where + ": until precedes activation");
    switch (f.kind) {
      case FaultDirective::Kind::crash:
      case FaultDirective::Kind::silent:
        for (auto id : f.targets)
          if (id != kLeaderToken && id >= n) bad(where + ": replica " + std::to_string(id) + " out of range");
        break;
      case FaultDirective::Kind::equivocate: {
        std::vector<std::uint32_t> uniq(f.targets);
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        if (uniq.size() != f.targets.size()) bad(where + ": duplicate coalition members");
        if (f.targets.size() > t)
          bad(where + ": coalition of " + std::to_string(f.targets.size()) +
              " exceeds resilience threshold t=" + std::to_string(t));
        for (auto id : f.targets)
          if (id != kLeaderToken && id >= n) bad(where + ": replica " + std::to_string(id) + " out of range");
        break;
      }
      case FaultDirective::Kind::slow_link:
      case FaultDirective::Kind::drop:
        if (f.from >= procs) bad(where + ": endpoint " + std::to_string(f.from) + " out of range");
        if (f.to >= procs) bad(where + ": endpoint " + std::to_string(f.to) + " out of range");
        break;
    }
  }
  return problems;
}

Scenario parse_scenario_text(const std::string& text, const std::string& base_dir,
                             std::vector<std::string>& errors) {
  Scenario sc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool clients_set = false;

  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    auto bad_value = [&]() {
      errors.push_back("line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    };

    try {
      if (key == "matrix") {
        sc.matrix_path = value;
        if (!value.empty() && value[0] != '/' && !base_dir.empty())
          sc.matrix_path = base_dir + "/" + value;
      } else if (key == "n") {
        sc.n = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "t") {
        sc.t = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "theta") {
        sc.theta = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "checkpoint_k") {
        sc.checkpoint_k = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "reopt_interval") {
        sc.reopt_interval = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "batch_max") {
        sc.batch_max = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "variant") {
        if (value == "flash")
          sc.variant = Variant::flash;
        else if (value == "conservative_only")
          sc.variant = Variant::conservative_only;
        else
          bad_value();
      } else if (key == "weights") {
        if (value == "wheat" || value == "bimodal")
          sc.weights = WeightScheme::bimodal;
        else if (value == "egalitarian")
          sc.weights = WeightScheme::egalitarian;
        else
          bad_value();
      } else if (key == "pattern") {
        if (value == "three_step" || value == "three")
          sc.pattern = Pattern::three_step;
        else if (value == "seven_step" || value == "seven")
          sc.pattern = Pattern::seven_step;
        else
          bad_value();
      } else if (key == "clients") {
        clients_set = true;
        sc.client_regions.clear();
        if (value == "all") {
          sc.client_regions.clear();  // resolved after n is known
        } else {
          for (const auto& part : split_on(value, ','))
            sc.client_regions.push_back(static_cast<std::uint32_t>(std::stoul(trim(part))));
        }
      } else if (key == "requests_per_client") {
        sc.requests_per_client = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "payload_bytes") {
        sc.payload_bytes = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "think_ms_max") {
        sc.think_max = ms_to_ns(std::stod(value));
      } else if (key == "log_check_ms") {
        sc.client_log_check = ms_to_ns(std::stod(value));
      } else if (key == "duration_ms") {
        sc.duration = ms_to_ns(std::stod(value));
      } else if (key == "seed") {
        sc.seed = std::stoull(value);
      } else if (key == "jitter") {
        if (value == "on")
          sc.jitter = true;
        else if (value == "off")
          sc.jitter = false;
        else
          bad_value();
      } else if (key == "jitter_sigma") {
        sc.jitter_sigma = std::stod(value);
      } else if (key == "request_timer_floor_ms") {
        sc.request_timer_floor = ms_to_ns(std::stod(value));
      } else if (key == "gst_ms") {
        sc.gst = ms_to_ns(std::stod(value));
      } else if (key == "fault") {
        FaultDirective d;
        if (parse_fault(value, lineno, d, errors)) sc.faults.push_back(d);
      } else {
        errors.push_back("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      }
    } catch (...) {
      bad_value();
    }
  }

  if (clients_set && sc.client_regions.empty()) {
    // clients = all: one client colocated with each replica region
    for (std::uint32_t i = 0; i < sc.n; ++i) sc.client_regions.push_back(i);
  }
  return sc;
}

Scenario load_scenario(const std::string& path, std::vector<std::string>& errors) {
  std::ifstream in(path);
  if (!in) {
    errors.push_back("cannot open scenario: " + path);
    return {};
  }
  std::stringstream buf;
  buf << in.rdbuf();
  std::string base_dir;
  auto slash = path.find_last_of('/');
  if (slash != std::string::npos) base_dir = path.substr(0, slash);

  Scenario sc = parse_scenario_text(buf.str(), base_dir, errors);
  if (!errors.empty()) return sc;
  if (sc.matrix_path.empty()) {
    errors.push_back("scenario is missing 'matrix ='");
    return sc;
  }
  try {
    sc.matrix = LatencyMatrix::load(sc.matrix_path);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
    return sc;
  }
  for (const auto& problem : sc.validate()) errors.push_back(problem);
  return sc;
}

}  // namespace wbft
