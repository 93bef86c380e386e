#include "combarw/cli.hpp"

#include <openssl/sha.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>

#include "combarw/combarw.hpp"

namespace combarw::cli {

namespace {

using json = nlohmann::ordered_json;

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string num(std::int64_t x) { return std::to_string(x); }
std::string num(int x) { return std::to_string(x); }
std::string num(std::uint64_t x) { return std::to_string(x); }
std::string num(bool x) { return x ? "1" : "0"; }

struct Common {
  std::uint64_t seed = kDefaultSeed;
  int threads = 1;
  std::string format;
  std::string out;
};

/// Output with provenance: the parameters that determine the result, and their hash.
class Report {
 public:
  Report(std::string command, const Common& c) : command_(std::move(command)) { param("seed", c.seed); }

  template <class T>
  void param(const std::string& key, const T& value) {
    if constexpr (std::is_convertible_v<T, std::string>)
      params_[key] = value;
    else
      params_[key] = num(value);
  }

  std::string hash() const { return content_hash(canonical()); }

  json provenance() const {
    json p;
    p["command"] = command_;
    for (const auto& [k, v] : params_) p[k] = v;
    p["config_hash"] = hash();
    return p;
  }

  void csv_footer(std::ostream& os) const {
    os << "# command=" << command_ << '\n';
    for (const auto& [k, v] : params_) os << "# " << k << '=' << v << '\n';
    os << "# config_hash=" << hash() << '\n';
  }

 private:
  std::string canonical() const {
    std::string s = "command = " + command_ + "\n";
    for (const auto& [k, v] : params_) s += k + " = " + v + "\n";
    return s;
  }

  std::string command_;
  std::map<std::string, std::string> params_;
};

class Csv {
 public:
  Csv(std::ostream& os, const std::vector<std::string>& header) : os_(os) { line(header); }

  template <class... T>
  void row(const T&... xs) {
    std::vector<std::string> cells{cell(xs)...};
    line(cells);
  }

 private:
  template <class T>
  static std::string cell(const T& x) {
    if constexpr (std::is_convertible_v<T, std::string>)
      return x;
    else
      return num(x);
  }

  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }

  std::ostream& os_;
};

json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"se", e.se}, {"n", e.n}}; }

Graph make_graph(const std::string& kind, int n) {
  if (kind == "comb") return Graph::comb(n);
  if (kind == "interval") return Graph::interval(n);
  throw std::invalid_argument("unknown graph " + kind);
}

Policy make_policy(const std::string& p) {
  if (p == "fifo") return Policy::Fifo;
  if (p == "lifo") return Policy::Lifo;
  if (p == "random") return Policy::Random;
  throw std::invalid_argument("unknown policy " + p);
}

Configuration make_sigma(const std::string& s, const Graph& g) {
  if (s == "ones") return Configuration::ones(g);
  if (s == "empty") return Configuration(g);
  throw std::invalid_argument("unknown configuration " + s);
}

std::unique_ptr<ShapeLaw<2>> make_law2(const std::string& law, double lambda) {
  if (law == "nu1") return std::make_unique<Nu1Law>();
  if (law == "domino") return std::make_unique<DominoLaw>();
  if (law == "interval") return std::make_unique<IntervalLaw>(lambda);
  if (law == "comb") return std::make_unique<CombLaw>(lambda);
  if (law == "coupled") return std::make_unique<CoupledSubshapeLaw>(lambda);
  return nullptr;
}

std::vector<int> law_heights(const std::string& law, double lambda, int k, std::uint64_t seed) {
  if (law == "comb3") return heights<3>(Comb3Law(lambda), k, seed);
  auto l = make_law2(law, lambda);
  if (!l) throw std::invalid_argument("unknown law " + law);
  return heights<2>(*l, k, seed);
}

std::string one_line(const Shape<2>& s) {
  std::string r = render(s);
  r.pop_back();
  std::replace(r.begin(), r.end(), '\n', '/');
  return r;
}

/// Reads `key = value` lines; blank lines and lines starting with '#' are skipped.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line without '=': " + line);
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

struct Command {
  CLI::App* app;
  std::function<void(std::ostream&)> body;
};

}  // namespace

std::string content_hash(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + std::string(1, '\0') + text;
  unsigned char md[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), md);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned char c : md) {
    s += hex[c >> 4];
    s += hex[c & 15];
  }
  return s;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Activated random walk on the comb and layer percolation experiments", "combarw"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common c;
  std::string config_path;
  std::vector<Command> commands;
  std::map<CLI::App*, std::string> formats;

  auto add = [&](const std::string& name, const std::string& desc, const std::string& default_format) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
    sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    formats[sub] = default_format;
    sub->add_option("--out", c.out, "output file (default stdout)");
    sub->add_option("--config", config_path, "key = value defaults file");
    return sub;
  };
  auto json_out = [&](std::ostream& os, json j) { os << j.dump(2) << '\n'; };

  // stabilize
  std::string graph = "comb", policy = "fifo", sigma_kind = "ones";
  int n = 20;
  double lambda = 1.0;
  {
    auto* s = add("stabilize", "stabilize a configuration and print the final state", "csv");
    s->add_option("--graph", graph)->check(CLI::IsMember({"comb", "interval"}))->capture_default_str();
    s->add_option("--n", n)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--lambda", lambda)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--policy", policy)->check(CLI::IsMember({"fifo", "lifo", "random"}))->capture_default_str();
    s->add_option("--sigma", sigma_kind)->check(CLI::IsMember({"ones", "empty"}))->capture_default_str();
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("stabilize", c);
      rep.param("graph", graph);
      rep.param("n", n);
      rep.param("lambda", lambda);
      rep.param("policy", policy);
      rep.param("sigma", sigma_kind);
      const Graph g = make_graph(graph, n);
      const auto r = stabilize(make_sigma(sigma_kind, g), InstructionStack(g, lambda, c.seed), make_policy(policy),
                               derive_seed(c.seed, 1));
      if (c.format == "json") {
        json j;
        j["sleepers"] = r.final.sleepers();
        j["spine_sleepers"] = r.final.sleepers_on_spine();
        j["teeth_sleepers"] = r.final.sleepers_on_teeth();
        j["sink_left"] = r.sink_left;
        j["sink_right"] = r.sink_right;
        j["instructions"] = r.instructions;
        j["odometer"] = r.odometer.values();
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"site", "state", "odometer"});
        for (int k = 0; k < g.site_count(); ++k) csv.row(to_string(g.site(k)), r.final.at_code(k), r.odometer.at_code(k));
        rep.csv_footer(os);
      }
    }});
  }

  // stationary
  int replicas = 200;
  {
    auto* s = add("stationary", "exact stationary samples of driven-dissipative ARW", "csv");
    s->add_option("--graph", graph)->check(CLI::IsMember({"comb", "interval"}))->capture_default_str();
    s->add_option("--n", n)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--lambda", lambda)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--replicas", replicas)->check(CLI::PositiveNumber)->capture_default_str();
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("stationary", c);
      rep.param("graph", graph);
      rep.param("n", n);
      rep.param("lambda", lambda);
      rep.param("replicas", replicas);
      const auto xs = stationary_densities(make_graph(graph, n), lambda, replicas, c.seed, c.threads);
      if (c.format == "json") {
        json j;
        j["graph"] = graph;
        j["n"] = n;
        j["lambda"] = lambda;
        j["replicas"] = replicas;
        j["density"] = estimate_json(mean_total(xs));
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"replica", "teeth_density", "spine_density", "total_density"});
        for (int i = 0; i < replicas; ++i) csv.row(i, xs[i].teeth, xs[i].spine, xs[i].total);
        rep.csv_footer(os);
      }
    }});
  }

  // drive
  std::int64_t steps = 1000;
  {
    auto* s = add("drive", "driven-dissipative chain trace", "csv");
    s->add_option("--graph", graph)->check(CLI::IsMember({"comb", "interval"}))->capture_default_str();
    s->add_option("--n", n)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--lambda", lambda)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--steps", steps)->check(CLI::PositiveNumber)->capture_default_str();
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("drive", c);
      rep.param("graph", graph);
      rep.param("n", n);
      rep.param("lambda", lambda);
      rep.param("steps", steps);
      const auto t = drive_dissipate(make_graph(graph, n), lambda, steps, Driving{}, c.seed);
      if (c.format == "json") {
        std::vector<double> tail;
        for (std::size_t i = t.size() / 2; i < t.size(); ++i) tail.push_back(static_cast<double>(t[i].total) / n);
        json j;
        j["steps"] = steps;
        j["second_half_density"] = estimate_json(estimate(tail));
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"step", "S", "T", "B"});
        for (const auto& p : t) csv.row(p.step, p.total, p.teeth, p.spine);
        rep.csv_footer(os);
      }
    }});
  }

  // layer
  std::string law = "interval";
  int k = 20;
  int render_shapes = 0;
  {
    auto* s = add("layer", "heights X_0..X_k of layer percolation", "csv");
    s->add_option("--law", law)->check(CLI::IsMember({"nu1", "domino", "interval", "comb", "comb3", "coupled"}))
        ->capture_default_str();
    s->add_option("--lambda", lambda)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--k", k)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--replicas", replicas)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--render", render_shapes, "print the first N step-0 shapes as ASCII instead")
        ->check(CLI::NonNegativeNumber);
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("layer", c);
      rep.param("law", law);
      rep.param("lambda", lambda);
      if (render_shapes > 0) {
        rep.param("render", render_shapes);
        auto l = make_law2(law, lambda);
        if (!l) throw std::invalid_argument("rendering needs a two-dimensional law");
        auto src = l->start(derive_seed(c.seed, 0), 0);
        Csv csv(os, {"diagonal", "shape"});
        for (int j = 0; j < render_shapes; ++j) csv.row(j, one_line(src->next()));
        rep.csv_footer(os);
        return;
      }
      rep.param("k", k);
      rep.param("replicas", replicas);
      auto runs = parallel_map(replicas, c.threads, [&](int i) {
        return law_heights(law, lambda, k, derive_seed(c.seed, static_cast<std::uint64_t>(i)));
      });
      if (c.format == "json") {
        std::vector<double> xs;
        for (const auto& r : runs) xs.push_back(r.back());
        json j;
        j["law"] = law;
        j["lambda"] = lambda;
        j["k"] = k;
        const Estimate e = estimate(xs);
        j["mean"] = e.mean;
        j["se"] = e.se;
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"k", "replica", "X_k"});
        for (int i = 0; i < replicas; ++i)
          for (int t = 0; t <= k; ++t) csv.row(t, i, runs[i][t]);
        rep.csv_footer(os);
      }
    }});
  }

  // rho
  {
    auto* s = add("rho", "estimate rho^(k) = E[X_k]/k", "csv");
    s->add_option("--law", law)->check(CLI::IsMember({"nu1", "domino", "interval", "comb", "comb3", "coupled"}))
        ->capture_default_str();
    s->add_option("--lambda", lambda)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--k", k)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--replicas", replicas)->check(CLI::PositiveNumber)->capture_default_str();
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("rho", c);
      rep.param("law", law);
      rep.param("lambda", lambda);
      rep.param("k", k);
      rep.param("replicas", replicas);
      auto xs = parallel_map(replicas, c.threads, [&](int i) {
        return static_cast<double>(law_heights(law, lambda, k, derive_seed(c.seed, static_cast<std::uint64_t>(i))).back()) / k;
      });
      const Estimate e = estimate(xs);
      if (c.format == "json") {
        json j{{"law", law}, {"lambda", lambda}, {"k", k}, {"replicas", replicas}, {"mean", e.mean}, {"se", e.se}};
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"law", "lambda", "k", "replicas", "rho", "se"});
        csv.row(law, lambda, k, replicas, e.mean, e.se);
        rep.csv_footer(os);
      }
    }});
  }

  // parse-shapes
  int site = 1, slots = 3;
  int n_parse = 1;
  std::int64_t f0_parse = 0;
  {
    auto* s = add("parse-shapes", "slots, chunks and shapes of the coupled construction at one site", "csv");
    s->add_option("--n", n_parse)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--lambda", lambda)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--site", site)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--slots", slots)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--f0", f0_parse)->capture_default_str();
    s->add_option("--sigma", sigma_kind)->check(CLI::IsMember({"ones", "empty"}))->capture_default_str();
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("parse-shapes", c);
      rep.param("n", n_parse);
      rep.param("lambda", lambda);
      rep.param("site", site);
      rep.param("slots", slots);
      rep.param("f0", f0_parse);
      rep.param("sigma", sigma_kind);
      const Graph g = Graph::comb(n_parse);
      if (site > n_parse) throw std::invalid_argument("site must be at most n");
      CoupledConstruction cc(InstructionStack(g, lambda, c.seed), make_sigma(sigma_kind, g), f0_parse);
      if (c.format == "json") {
        json j;
        j["minimal_spine"] = cc.minimal()(SiteId::spine(site));
        j["minimal_tooth"] = cc.minimal()(SiteId::tooth(site));
        for (int t = 0; t < slots; ++t) {
          const auto [sp, th] = cc.render(site, t, 1);
          j["slots"].push_back({{"spine", sp}, {"tooth", th}, {"shape", render(cc.shape(site, t))}});
        }
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"slot", "offset", "U", "width", "spine", "tooth", "shape"});
        for (int t = 0; t < slots; ++t) {
          const auto [sp, th] = cc.render(site, t, 1);
          const auto& sl = cc.slot(site, t);
          csv.row(t, cc.offset(site, t), sl.meta.U(), sl.meta.width(), sp, th, one_line(cc.shape(site, t)));
        }
        rep.csv_footer(os);
      }
    }});
  }

  // verify-odometer
  int paths = 100;
  int n_verify = 4;
  std::int64_t f0_verify = -1;
  {
    auto* s = add("verify-odometer", "round trip random infection paths through the inverse of Phi", "json");
    s->add_option("--n", n_verify)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--lambda", lambda)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--f0", f0_verify)->capture_default_str();
    s->add_option("--paths", paths)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--sigma", sigma_kind)->check(CLI::IsMember({"ones", "empty"}))->capture_default_str();
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("verify-odometer", c);
      rep.param("n", n_verify);
      rep.param("lambda", lambda);
      rep.param("f0", f0_verify);
      rep.param("paths", paths);
      rep.param("sigma", sigma_kind);
      const Graph g = Graph::comb(n_verify);
      const auto sigma = make_sigma(sigma_kind, g);
      CoupledConstruction cc(InstructionStack(g, lambda, c.seed), sigma, f0_verify);
      const bool minimal_stable = verify_stable(cc.minimal(), cc.stack(), sigma, f0_verify).stable;
      Rng rng = make_rng(derive_seed(c.seed, 1));
      struct Row {
        int stable, round_trip, height;
      };
      std::vector<Row> rows;
      for (int i = 0; i < paths; ++i) {
        InfectionPathOnComb path{{{0, 0}}};
        for (int v = 1; v <= n_verify; ++v) {
          const auto& a = path.cells.back();
          const int j = a[0] + a[1];
          const auto sh = cc.shape(v, j);
          const auto& p = sh.points()[rng() % sh.size()];
          path.cells.push_back({static_cast<int>(cc.offset(v, j) + p[0]), a[1] + p[1]});
        }
        const Odometer u = cc.odometer_from_path(path);
        const bool ok = verify_stable(u, cc.stack(), sigma, f0_verify).stable;
        rows.push_back({ok, ok && cc.phi(u) == path, path.cells.back()[1]});
      }
      int stable = 0, trips = 0;
      for (const auto& r : rows) {
        stable += r.stable;
        trips += r.round_trip;
      }
      if (c.format == "json") {
        json j{{"minimal_stable", minimal_stable}, {"paths", paths}, {"stable", stable}, {"round_trips", trips}};
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"path", "stable", "round_trip", "height"});
        for (int i = 0; i < paths; ++i) csv.row(i, rows[i].stable, rows[i].round_trip, rows[i].height);
        rep.csv_footer(os);
      }
    }});
  }

  // bounds
  int k_max = 40, lower_replicas = 2000;
  int n_big = 250;
  {
    auto* s = add("bounds", "lower, direct and upper estimates of the comb density", "json");
    s->add_option("--lambda", lambda)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--n", n_big)->check(CLI::Range(50, 1 << 20))->capture_default_str();
    s->add_option("--replicas", replicas)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--kmax", k_max)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--lower-replicas", lower_replicas)->check(CLI::PositiveNumber)->capture_default_str();
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("bounds", c);
      rep.param("lambda", lambda);
      rep.param("n", n_big);
      rep.param("replicas", replicas);
      rep.param("kmax", k_max);
      rep.param("lower_replicas", lower_replicas);
      const auto b = bounds_report(lambda, n_big, replicas, k_max, lower_replicas, c.seed, c.threads);
      if (c.format == "json") {
        json j;
        j["lambda"] = b.lambda;
        j["lower"] = {{"estimate", b.lower.estimate}, {"se", b.lower.se}, {"truncation", b.lower.truncation},
                      {"k_max", b.lower.k_max}, {"replicas", b.lower.replicas}};
        j["direct"] = estimate_json(b.direct);
        j["upper"] = estimate_json(b.upper);
        j["lower_le_direct"] = b.lower_le_direct;
        j["direct_le_upper"] = b.direct_le_upper;
        j["note"] = "direct is the stationary mean S/n at finite n, a proxy for the limiting density";
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"lambda", "lower", "lower_se", "truncation", "direct", "direct_se", "upper", "upper_se",
                     "lower_le_direct", "direct_le_upper"});
        csv.row(b.lambda, b.lower.estimate, b.lower.se, b.lower.truncation, b.direct.mean, b.direct.se, b.upper.mean,
                b.upper.se, b.lower_le_direct, b.direct_le_upper);
        rep.csv_footer(os);
      }
    }});
  }

  // fig2
  std::vector<double> grid{0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
  {
    auto* s = add("fig2", "teeth, spine and interval stationary densities over a lambda grid", "csv");
    s->add_option("--lambdas", grid, "comma separated")->delimiter(',')->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--n", n_big)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--replicas", replicas)->check(CLI::PositiveNumber)->capture_default_str();
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("fig2", c);
      std::string gs;
      for (double l : grid) gs += (gs.empty() ? "" : ",") + num(l);
      rep.param("lambdas", gs);
      rep.param("n", n_big);
      rep.param("replicas", replicas);
      const auto rows = fig2_experiment(grid, n_big, replicas, c.seed, c.threads);
      if (c.format == "json") {
        json j;
        for (const auto& r : rows)
          j["rows"].push_back({{"lambda", r.lambda}, {"teeth", estimate_json(r.teeth)},
                               {"spine", estimate_json(r.spine)}, {"interval", estimate_json(r.interval)}});
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"lambda", "teeth_density", "teeth_se", "spine_density", "spine_se", "interval_density",
                     "interval_se"});
        for (const auto& r : rows)
          csv.row(r.lambda, r.teeth.mean, r.teeth.se, r.spine.mean, r.spine.se, r.interval.mean, r.interval.se);
        rep.csv_footer(os);
      }
    }});
  }

  // fig3
  double lambda3 = 0.8;
  int n3 = 500;
  std::int64_t steps3 = 2000;
  {
    auto* s = add("fig3", "spine and tooth density trace under uniform driving", "csv");
    s->add_option("--lambda", lambda3)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--n", n3)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--steps", steps3)->check(CLI::PositiveNumber)->capture_default_str();
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("fig3", c);
      rep.param("lambda", lambda3);
      rep.param("n", n3);
      rep.param("steps", steps3);
      const auto rows = fig3_experiment(lambda3, n3, steps3, c.seed);
      if (c.format == "json") {
        std::vector<double> x, y;
        for (const auto& r : rows) {
          x.push_back(static_cast<double>(r.step));
          y.push_back(r.avg);
        }
        json j;
        if (rows.size() >= 3) {
          const auto f = fit_hockey_stick(x, y);
          j["fit"] = {{"intercept", f.intercept}, {"slope", f.slope}, {"breakpoint", f.breakpoint},
                      {"plateau", f.plateau}, {"r_squared", f.r_squared}};
        }
        j["final"] = {{"spine", rows.back().spine}, {"tooth", rows.back().tooth}, {"avg", rows.back().avg}};
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"step", "spine_density", "tooth_density", "avg_density"});
        for (const auto& r : rows) csv.row(r.step, r.spine, r.tooth, r.avg);
        rep.csv_footer(os);
      }
    }});
  }

  // couple-test
  int m = 100'000;
  {
    auto* s = add("couple-test", "containment and marginal law of the coupled interval subshapes", "json");
    s->add_option("--lambda", lambda)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--m", m)->check(CLI::PositiveNumber)->capture_default_str();
    commands.push_back({s, [&](std::ostream& os) {
      Report rep("couple-test", c);
      rep.param("lambda", lambda);
      rep.param("m", m);
      const auto pairs = sample_coupled(lambda, m, c.seed);
      std::int64_t contained = 0, tops = 0, cols = 0;
      std::vector<std::int64_t> widths;
      for (const auto& pr : pairs) {
        bool ok = true;
        for (const auto& p : pr.sub.points()) ok = ok && pr.comb.contains(p);
        contained += ok;
        widths.push_back(pr.sub_meta.R);
        for (char t : pr.sub_meta.top) tops += t;
        cols += pr.sub_meta.R;
      }
      const double lp = sleep_probability(1.5 * lambda);
      const double freq = static_cast<double>(tops) / cols;
      const auto chi = geometric_gof(widths, 0.5);
      if (c.format == "json") {
        json j{{"samples", m},
               {"contained", contained},
               {"top_frequency", freq},
               {"top_expected", lp},
               {"top_se", binomial_se(lp, cols)},
               {"width_chi_square_p", chi.p_value}};
        j["provenance"] = rep.provenance();
        json_out(os, j);
      } else {
        Csv csv(os, {"samples", "contained", "top_frequency", "top_expected", "top_se", "width_chi_square_p"});
        csv.row(m, contained, freq, lp, binomial_se(lp, cols), chi.p_value);
        rep.csv_footer(os);
      }
    }});
  }

  // Config defaults go first so that flags given on the command line take precedence.
  std::vector<std::string> argv = args;
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      if (path.empty()) continue;
      auto sub = std::find_if(argv.begin(), argv.end(), [](const std::string& a) { return a.rfind("-", 0) != 0; });
      if (sub == argv.end()) throw std::invalid_argument("--config needs a subcommand");
      std::vector<std::string> extra;
      for (const auto& [key, value] : read_config(path)) extra.push_back("--" + key + "=" + value);
      argv.insert(sub + 1, extra.begin(), extra.end());
      break;
    }
    std::vector<std::string> rev(argv.rbegin(), argv.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  for (const auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    if (c.format.empty()) c.format = formats[cmd.app];
    try {
      if (c.out.empty()) {
        cmd.body(out);
      } else {
        std::ostringstream buf;
        cmd.body(buf);
        std::ofstream f(c.out, std::ios::binary);
        if (!f) throw std::invalid_argument("cannot write " + c.out);
        f << buf.str();
      }
      return 0;
    } catch (const GuardExceeded& e) {
      err << "guard: " << e.what() << '\n';
      return 2;
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    } catch (const std::out_of_range& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      err << "internal: " << e.what() << '\n';
      return 2;
    }
  }
  return 1;
}

}  // namespace combarw::cli
