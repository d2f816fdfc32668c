// Command-line front-end for the energy-constrained randomness toolkit:
// membership queries, entropy-bound sweeps, trade-off function design,
// protocol simulation and concentration checks. All numerics live in the
// library; this file only parses arguments, orchestrates calls and formats
// CSV/JSON/report output.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eqr/bellmap.hpp"
#include "eqr/certify.hpp"
#include "eqr/entropy.hpp"
#include "eqr/extract.hpp"
#include "eqr/qset.hpp"
#include "eqr/sim.hpp"

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------- utility

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(const json& cfg) {
  std::ostringstream os;
  os << std::hex << fnv1a(cfg.dump());
  return os.str();
}

int thread_count() {
  const char* env = std::getenv("EQR_THREADS");
  if (!env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  return v >= 1 ? static_cast<int>(v) : 1;
}

// Runs fn(i) for i in [0, n) on EQR_THREADS workers. Callers store results
// by index, so output order never depends on scheduling.
template <typename F>
void parallel_for(int n, F fn) {
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::string fmt(double v, int prec = 12) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// ------------------------------------------------------- config plumbing

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw ConfigError("config section '" + path + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown config key '" + path + "." + it.key() +
                        "'");
}

Eigen::Vector2d as_vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError("config value '" + path +
                      "' must be an array of two numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  require_keys(cfg, "<root>",
               {"problem", "algorithm", "protocol", "output"});
  if (cfg.contains("problem"))
    require_keys(cfg["problem"], "problem",
                 {"behaviour", "energies", "inputs", "energy_functional"});
  if (cfg.contains("problem") && cfg["problem"].contains("energies"))
    require_keys(cfg["problem"]["energies"], "problem.energies",
                 {"avg", "pk"});
  if (cfg.contains("problem") && cfg["problem"].contains("energy_functional"))
    require_keys(cfg["problem"]["energy_functional"],
                 "problem.energy_functional", {"coeffs", "value"});
  if (cfg.contains("algorithm"))
    require_keys(cfg["algorithm"], "algorithm",
                 {"k", "grid", "points", "tolerance", "min_entropy",
                  "figure", "variant", "optimize_split", "upper_grid",
                  "etas", "deltas", "mu_max"});
  if (cfg.contains("protocol")) {
    require_keys(cfg["protocol"], "protocol",
                 {"n", "seed", "trials", "eps_t", "eps_m", "eps_ext",
                  "eps_omega", "error_terms", "threshold_r", "device"});
    if (cfg["protocol"].contains("device")) {
      require_keys(cfg["protocol"]["device"], "protocol.device",
                   {"type", "xi", "eta", "delta", "declared_avg_compliant",
                    "components"});
      if (cfg["protocol"]["device"].contains("components"))
        for (const auto& c : cfg["protocol"]["device"]["components"])
          require_keys(c, "protocol.device.components[]",
                       {"weight", "behaviour", "omega"});
    }
  }
  if (cfg.contains("output"))
    require_keys(cfg["output"], "output",
                 {"csv", "transcript", "key", "report", "json", "prefix"});
  return cfg;
}

// Flag values fill `eff` first; a --config file then supersedes them. The
// effective document is what gets hashed into output metadata.
class Effective {
 public:
  explicit Effective(const std::string& config_path) {
    if (!config_path.empty()) file_ = load_config_file(config_path);
  }

  // Sets a flag-derived default unless the file provides the pointer.
  void set_default(const json::json_pointer& ptr, const json& v) {
    if (!has_file(ptr)) doc_[ptr] = v;
  }

  bool has(const json::json_pointer& ptr) const {
    return has_file(ptr) || doc_.contains(ptr);
  }

  json get(const json::json_pointer& ptr) const {
    if (has_file(ptr)) return file_.at(ptr);
    return doc_.at(ptr);
  }

  template <typename T>
  T value(const json::json_pointer& ptr, const T& fallback) const {
    if (!has(ptr)) return fallback;
    return get(ptr).get<T>();
  }

  // Fully merged document (file wins), used for hashing and echo.
  json merged() const {
    json out = doc_;
    merge_into(out, file_);
    return out;
  }

 private:
  bool has_file(const json::json_pointer& ptr) const {
    return !file_.is_null() && file_.contains(ptr);
  }

  static void merge_into(json& dst, const json& src) {
    if (!src.is_object()) {
      if (!src.is_null()) dst = src;
      return;
    }
    if (!dst.is_object()) dst = json::object();
    for (auto it = src.begin(); it != src.end(); ++it) {
      if (it->is_object())
        merge_into(dst[it.key()], *it);
      else
        dst[it.key()] = *it;
    }
  }

  json file_;
  json doc_;
};

void write_meta(std::ostream& out, const std::string& command,
                const json& cfg, const std::string& columns) {
  out << "# eqr " << kVersion << "\n";
  out << "# command: " << command << "\n";
  out << "# config-hash: fnv1a-" << hash_hex(cfg) << "\n";
  out << "# columns: " << columns << "\n";
}

struct OutStream {
  std::ofstream file;
  std::ostream* out = &std::cout;
  explicit OutStream(const std::string& path) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw ConfigError("cannot open output file '" + path + "'");
      out = &file;
    }
  }
  std::ostream& get() { return *out; }
};

// ------------------------------------------------------- device assembly

struct DeviceSetup {
  eqr::DeviceModel model;
  eqr::Behaviour expected;
  eqr::EnergyBounds energies{Eigen::Vector2d::Zero(),
                             Eigen::Vector2d::Ones()};
  std::optional<eqr::LinearTarget> functional;
};

DeviceSetup build_device(const Effective& eff,
                         const eqr::InputDistribution& inputs) {
  const json::json_pointer dtype("/protocol/device/type");
  if (!eff.has(dtype))
    throw ConfigError("no device specified (flag --device or config "
                      "protocol.device.type)");
  const std::string type = eff.get(dtype).get<std::string>();
  const json::json_pointer pxi("/protocol/device/xi");
  const json::json_pointer peta("/protocol/device/eta");

  DeviceSetup ds;
  if (type == "bpsk") {
    eqr::BpskDevice dev;
    dev.xi = eff.value(pxi, 0.5);
    dev.eta = eff.value(peta, 1.0);
    dev.delta = eff.value(json::json_pointer("/protocol/device/delta"), 0.0);
    const auto bb = eqr::bpsk_behaviour(dev.xi, dev.eta);
    const double wbar = (1.0 + dev.delta) * bb.mean_photons;
    ds.model = dev;
    ds.expected = bb.behaviour;
    ds.energies = eqr::EnergyBounds(Eigen::Vector2d::Constant(wbar),
                                    Eigen::Vector2d::Ones());
    ds.functional =
        eqr::LinearTarget{Eigen::Vector2d(inputs.p1, inputs.p2), wbar};
    return ds;
  }
  if (type == "ook") {
    eqr::OokDevice dev;
    dev.xi = eff.value(pxi, 0.5);
    dev.eta = eff.value(peta, 1.0);
    const auto ob = eqr::ook_behaviour(dev.xi, dev.eta);
    ds.model = dev;
    ds.expected = ob.behaviour;
    ds.energies = ob.energies;
    return ds;
  }
  if (type == "iid") {
    const json::json_pointer comps("/protocol/device/components");
    if (!eff.has(comps))
      throw ConfigError("iid device needs protocol.device.components");
    eqr::IidEnsembleDevice dev;
    dev.declared_avg_compliant = eff.value(
        json::json_pointer("/protocol/device/declared_avg_compliant"), true);
    double e1 = 0.0, e2 = 0.0;
    Eigen::Vector2d avg = Eigen::Vector2d::Zero();
    for (const auto& c : eff.get(comps)) {
      eqr::EnsembleComponent comp;
      comp.weight = c.at("weight").get<double>();
      const auto be = as_vec2(c.at("behaviour"), "components[].behaviour");
      comp.behaviour = eqr::Behaviour(be(0), be(1));
      comp.omega = as_vec2(c.at("omega"), "components[].omega");
      e1 += comp.weight * comp.behaviour.e1;
      e2 += comp.weight * comp.behaviour.e2;
      avg += comp.weight * comp.omega;
      dev.components.push_back(comp);
    }
    ds.model = dev;
    ds.expected = eqr::Behaviour(e1, e2);
    const json::json_pointer pen("/problem/energies");
    if (eff.has(pen)) {
      const json en = eff.get(pen);
      const Eigen::Vector2d pk = en.contains("pk")
                                     ? as_vec2(en["pk"], "energies.pk")
                                     : Eigen::Vector2d::Ones();
      const Eigen::Vector2d av =
          en.contains("avg") ? as_vec2(en["avg"], "energies.avg") : pk;
      ds.energies = eqr::EnergyBounds(av, pk);
    } else {
      ds.energies = eqr::EnergyBounds(avg, Eigen::Vector2d::Ones());
    }
    return ds;
  }
  throw ConfigError("unknown device type '" + type +
                    "' (expected bpsk, ook or iid)");
}

// ------------------------------------------------------------ membership

int cmd_membership(const std::string& config_path,
                   const std::vector<double>& e_flag,
                   const std::vector<double>& w_flag, double margin) {
  Effective eff(config_path);
  if (e_flag.size() == 2)
    eff.set_default(json::json_pointer("/problem/behaviour"),
                    json{e_flag[0], e_flag[1]});
  if (w_flag.size() == 2)
    eff.set_default(json::json_pointer("/problem/energies/pk"),
                    json{w_flag[0], w_flag[1]});
  eff.set_default(json::json_pointer("/algorithm/tolerance"), margin);

  const json::json_pointer pb("/problem/behaviour");
  const json::json_pointer pw("/problem/energies/pk");
  if (!eff.has(pb) || !eff.has(pw))
    throw ConfigError("membership needs --e and --w (or config values)");
  const Eigen::Vector2d ev = as_vec2(eff.get(pb), "problem.behaviour");
  const Eigen::Vector2d w = as_vec2(eff.get(pw), "problem.energies.pk");
  const double tol =
      eff.value(json::json_pointer("/algorithm/tolerance"), margin);

  const eqr::Behaviour b(ev(0), ev(1));
  const bool cf = eqr::in_quantum_set_closed_form(b, w);
  const bool sdp_verdict = eqr::in_quantum_set_sdp(b, w, tol);

  // Angular slack of the closed-form criterion: negative outside the set,
  // +inf once the energies make every behaviour reachable.
  double slack = std::numeric_limits<double>::infinity();
  const Eigen::Vector2d wc = w.cwiseMin(1.0).cwiseMax(0.0);
  if (wc.sum() < 1.0) {
    const double lhs = std::abs(std::asin(std::clamp(b.e1, -1.0, 1.0)) -
                                std::asin(std::clamp(b.e2, -1.0, 1.0)));
    const double rhs = 2.0 * (std::asin(std::sqrt(wc(0))) +
                              std::asin(std::sqrt(wc(1))));
    slack = rhs - lhs;
  }

  std::cout << "behaviour:    (" << fmt(b.e1) << ", " << fmt(b.e2) << ")\n";
  std::cout << "peak bounds:  (" << fmt(w(0)) << ", " << fmt(w(1)) << ")\n";
  std::cout << "closed-form:  " << (cf ? "member" : "non-member") << "\n";
  std::cout << "sdp:          " << (sdp_verdict ? "member" : "non-member")
            << "\n";
  std::cout << "margin:       " << fmt(slack, 6)
            << " rad (closed-form boundary slack)\n";
  if (cf != sdp_verdict) {
    std::cerr << "error: closed-form and SDP verdicts disagree\n";
    return 2;
  }
  return cf ? 0 : 1;
}

// --------------------------------------------------------------- entropy

eqr::EnergyBounds energies_from(const Effective& eff,
                                const Eigen::Vector2d& fallback_avg,
                                const Eigen::Vector2d& fallback_pk) {
  const json::json_pointer pen("/problem/energies");
  Eigen::Vector2d avg = fallback_avg, pk = fallback_pk;
  if (eff.has(pen)) {
    const json en = eff.get(pen);
    if (en.contains("pk")) pk = as_vec2(en["pk"], "problem.energies.pk");
    if (en.contains("avg"))
      avg = as_vec2(en["avg"], "problem.energies.avg");
    else
      avg = pk;
  }
  return eqr::EnergyBounds(avg, pk);
}

eqr::InputDistribution inputs_from(const Effective& eff) {
  const json::json_pointer pi("/problem/inputs");
  if (!eff.has(pi)) return {0.5, 0.5};
  const Eigen::Vector2d p = as_vec2(eff.get(pi), "problem.inputs");
  return {p(0), p(1)};
}

int cmd_entropy(const Effective& eff, const std::string& out_path) {
  const json cfg = eff.merged();
  OutStream os(out_path);
  std::ostream& out = os.get();
  out.precision(12);

  const int figure = eff.value(json::json_pointer("/algorithm/figure"), 0);
  const int k = eff.value(json::json_pointer("/algorithm/k"),
                          figure == 6 ? 32 : 16);
  const int points = eff.value(json::json_pointer("/algorithm/points"), 25);
  const eqr::InputDistribution inputs = inputs_from(eff);

  if (figure == 3) {
    // H_k versus E- at max-average energies (0.3, 0.3) for several k.
    const eqr::EnergyBounds en = energies_from(
        eff, Eigen::Vector2d::Constant(0.3), Eigen::Vector2d::Ones());
    const std::vector<int> ks{2, 4, 8, 16};
    write_meta(out, "entropy --figure 3", cfg, "e_minus,k,H_k");
    const int total = points * static_cast<int>(ks.size());
    std::vector<std::string> rows(static_cast<std::size_t>(total));
    parallel_for(total, [&](int idx) {
      const int pi = idx / static_cast<int>(ks.size());
      const int ki = idx % static_cast<int>(ks.size());
      const double em =
          0.9 * static_cast<double>(pi) / static_cast<double>(points - 1);
      eqr::EntropyProblem prob{eqr::Behaviour(em, -em), en, inputs, ks[ki],
                               {}};
      const double h = eqr::entropy_lower_bound(prob).value;
      std::ostringstream row;
      row.precision(12);
      row << em << "," << ks[ki] << "," << h;
      rows[static_cast<std::size_t>(idx)] = row.str();
    });
    for (const auto& r : rows) out << r << "\n";
    return 0;
  }

  if (figure == 4) {
    // Entropy over the correlation square for the max-average assumption
    // (variant a) and the max-peak assumption (variant b) at 0.15.
    const int grid = eff.value(json::json_pointer("/algorithm/grid"), 9);
    write_meta(out, "entropy --figure 4", cfg,
               "variant,e1,e2,H_k,classical");
    out << "# rows outside the quantum set are omitted\n";
    struct Cell {
      std::string row;
    };
    const int total = 2 * grid * grid;
    std::vector<Cell> cells(static_cast<std::size_t>(total));
    parallel_for(total, [&](int idx) {
      const int v = idx / (grid * grid);
      const int rem = idx % (grid * grid);
      const int i = rem / grid, j = rem % grid;
      const double e1 =
          -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid - 1);
      const double e2 =
          -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(grid - 1);
      const Eigen::Vector2d w = Eigen::Vector2d::Constant(0.15);
      const eqr::EnergyBounds en =
          v == 0 ? eqr::EnergyBounds(w, Eigen::Vector2d::Ones())
                 : eqr::EnergyBounds::peak_only(w);
      const eqr::Behaviour b(e1, e2);
      const bool classical = eqr::is_classical(
          b, w,
          v == 0 ? eqr::ClassicalityMode::MaxAverage
                 : eqr::ClassicalityMode::MaxPeak);
      try {
        eqr::EntropyProblem prob{b, en, inputs, k, {}};
        const double h = eqr::entropy_lower_bound(prob).value;
        std::ostringstream row;
        row.precision(12);
        row << (v == 0 ? "a" : "b") << "," << e1 << "," << e2 << "," << h
            << "," << (classical ? 1 : 0);
        cells[static_cast<std::size_t>(idx)].row = row.str();
      } catch (const eqr::InfeasibleTargetError&) {
        // outside the quantum set at these energies; no row
      }
    });
    for (const auto& c : cells)
      if (!c.row.empty()) out << c.row << "\n";
    return 0;
  }

  if (figure == 6) {
    // BPSK rate versus mean photon number under the input-averaged energy
    // bound (1 + delta) xi^2 / 2, for several efficiencies and margins.
    std::vector<double> etas{1.0, 0.9};
    std::vector<double> deltas{0.0, 0.01, 0.1};
    const json::json_pointer petas("/algorithm/etas");
    const json::json_pointer pdeltas("/algorithm/deltas");
    if (eff.has(petas)) etas = eff.get(petas).get<std::vector<double>>();
    if (eff.has(pdeltas))
      deltas = eff.get(pdeltas).get<std::vector<double>>();
    const double mu_max =
        eff.value(json::json_pointer("/algorithm/mu_max"), 0.4);
    write_meta(out, "entropy --figure 6", cfg,
               "eta,delta,mean_photons,H_k");
    const int per = points;
    const int total =
        static_cast<int>(etas.size() * deltas.size()) * per;
    std::vector<std::string> rows(static_cast<std::size_t>(total));
    parallel_for(total, [&](int idx) {
      const int pi = idx % per;
      const int rest = idx / per;
      const double eta = etas[static_cast<std::size_t>(
          rest / static_cast<int>(deltas.size()))];
      const double delta = deltas[static_cast<std::size_t>(
          rest % static_cast<int>(deltas.size()))];
      const double mu = mu_max * static_cast<double>(pi + 1) /
                        static_cast<double>(per);
      const auto bb = eqr::bpsk_behaviour(std::sqrt(2.0 * mu), eta);
      const double wbar = (1.0 + delta) * mu;
      eqr::EntropyProblem prob{
          bb.behaviour,
          eqr::EnergyBounds(Eigen::Vector2d::Constant(wbar),
                            Eigen::Vector2d::Ones()),
          inputs, k,
          eqr::LinearTarget{Eigen::Vector2d(inputs.p1, inputs.p2), wbar}};
      const double h = eqr::entropy_lower_bound(prob).value;
      std::ostringstream row;
      row.precision(12);
      row << eta << "," << delta << "," << mu << "," << h;
      rows[static_cast<std::size_t>(idx)] = row.str();
    });
    for (const auto& r : rows) out << r << "\n";
    return 0;
  }

  if (figure == 7) {
    // OOK rate versus mean photon number at max-peak energies, with the
    // closed-form worst-case entropy alongside.
    std::vector<double> etas{0.25, 0.5, 1.0};
    const json::json_pointer petas("/algorithm/etas");
    if (eff.has(petas)) etas = eff.get(petas).get<std::vector<double>>();
    const double mu_max =
        eff.value(json::json_pointer("/algorithm/mu_max"), 0.45);
    write_meta(out, "entropy --figure 7", cfg,
               "eta,mean_photons,H_k,H_analytic");
    const int per = points;
    const int total = static_cast<int>(etas.size()) * per;
    std::vector<std::string> rows(static_cast<std::size_t>(total));
    parallel_for(total, [&](int idx) {
      const double eta = etas[static_cast<std::size_t>(idx / per)];
      const int pi = idx % per;
      const double mu = mu_max * static_cast<double>(pi + 1) /
                        static_cast<double>(per);
      const auto ob = eqr::ook_behaviour(std::sqrt(2.0 * mu), eta);
      eqr::EntropyProblem prob{ob.behaviour, ob.energies, inputs, k, {}};
      const double h = eqr::entropy_lower_bound(prob).value;
      const double ha =
          eqr::ook_entropy_analytic(inputs, ob.behaviour.e2, mu);
      std::ostringstream row;
      row.precision(12);
      row << eta << "," << mu << "," << h << "," << ha;
      rows[static_cast<std::size_t>(idx)] = row.str();
    });
    for (const auto& r : rows) out << r << "\n";
    return 0;
  }

  // Single-point query: one row, optionally with the min-entropy bound and
  // a decomposition upper bound.
  const json::json_pointer pb("/problem/behaviour");
  if (!eff.has(pb))
    throw ConfigError("entropy needs --figure or a behaviour (--e)");
  const Eigen::Vector2d ev = as_vec2(eff.get(pb), "problem.behaviour");
  const eqr::EnergyBounds en = energies_from(
      eff, Eigen::Vector2d::Constant(0.3), Eigen::Vector2d::Constant(0.3));
  std::optional<eqr::LinearTarget> functional;
  const json::json_pointer pf("/problem/energy_functional");
  if (eff.has(pf)) {
    const json f = eff.get(pf);
    functional = eqr::LinearTarget{
        as_vec2(f.at("coeffs"), "energy_functional.coeffs"),
        f.at("value").get<double>()};
  }
  const bool want_min =
      eff.value(json::json_pointer("/algorithm/min_entropy"), false);
  const int upper_grid =
      eff.value(json::json_pointer("/algorithm/upper_grid"), 0);

  eqr::EntropyProblem prob{eqr::Behaviour(ev(0), ev(1)), en, inputs, k,
                           functional};
  const auto bound = eqr::entropy_lower_bound(prob);
  write_meta(out, "entropy", cfg, "e1,e2,k,H_k,Hmin,H_upper");
  out << ev(0) << "," << ev(1) << "," << k << "," << bound.value << ",";
  if (want_min) out << eqr::min_entropy_bound(prob).value;
  out << ",";
  if (upper_grid > 0)
    out << eqr::decompose_upper_bound(eqr::Behaviour(ev(0), ev(1)), en,
                                      inputs, upper_grid)
               .value;
  out << "\n";
  return 0;
}

// -------------------------------------------------------------- tradeoff

int cmd_tradeoff(const Effective& eff, const std::string& out_path,
                 const std::string& json_path) {
  const json cfg = eff.merged();
  const eqr::InputDistribution inputs = inputs_from(eff);
  const json::json_pointer pb("/problem/behaviour");
  if (!eff.has(pb)) throw ConfigError("tradeoff needs a behaviour (--e)");
  const Eigen::Vector2d ev = as_vec2(eff.get(pb), "problem.behaviour");
  const eqr::Behaviour b(ev(0), ev(1));
  const eqr::EnergyBounds en = energies_from(
      eff, Eigen::Vector2d::Constant(0.3), Eigen::Vector2d::Constant(0.3));
  const int k = eff.value(json::json_pointer("/algorithm/k"), 16);

  eqr::TradeoffOptions topt;
  topt.optimize_split =
      eff.value(json::json_pointer("/algorithm/optimize_split"), false);
  const std::string variant =
      eff.value(json::json_pointer("/algorithm/variant"),
                std::string("proof"));
  if (variant == "proof")
    topt.variant = eqr::VarianceVariant::Proof;
  else if (variant == "statement")
    topt.variant = eqr::VarianceVariant::Statement;
  else if (variant == "conservative")
    topt.variant = eqr::VarianceVariant::Conservative;
  else
    throw ConfigError("unknown variance variant '" + variant + "'");
  const json::json_pointer pf("/problem/energy_functional");
  if (eff.has(pf)) {
    const json f = eff.get(pf);
    topt.energy_functional = eqr::LinearTarget{
        as_vec2(f.at("coeffs"), "energy_functional.coeffs"),
        f.at("value").get<double>()};
  }

  const auto tf = eqr::make_tradeoff_function(b, en, inputs, k, topt);
  const double value = tf.value(b, en.avg);

  OutStream os(out_path);
  std::ostream& out = os.get();
  out.precision(12);
  out << "trade-off function (k = " << k << ", variant = " << variant
      << ")\n";
  out << "  alpha       = " << tf.alpha() << "  split (" << tf.alpha_split(0)
      << ", " << tf.alpha_split(1) << ")\n";
  out << "  beta        = (" << tf.beta(0) << ", " << tf.beta(1) << ")\n";
  out << "  gamma       = (" << tf.gamma(0) << ", " << tf.gamma(1) << ")\n";
  out << "  xi range    = [" << tf.xi_minus << ", " << tf.xi_plus << "]\n";
  out << "  V           = " << tf.v << "\n";
  out << "  value at expected behaviour = " << value << "\n";

  if (!json_path.empty()) {
    json doc;
    doc["alpha_split"] = {tf.alpha_split(0), tf.alpha_split(1)};
    doc["beta"] = {tf.beta(0), tf.beta(1)};
    doc["gamma"] = {tf.gamma(0), tf.gamma(1)};
    doc["inputs"] = {inputs.p1, inputs.p2};
    doc["variant"] = variant;
    doc["xi_plus"] = tf.xi_plus;
    doc["xi_minus"] = tf.xi_minus;
    doc["v"] = tf.v;
    doc["value_at_expected"] = value;
    doc["config_hash"] = hash_hex(cfg);
    std::ofstream jf(json_path);
    if (!jf) throw ConfigError("cannot open '" + json_path + "'");
    jf << doc.dump(2) << "\n";
  }
  return 0;
}

// --------------------------------------------------------------- certify

struct ProtocolSetup {
  DeviceSetup device;
  eqr::ProtocolConfig cfg;
  double tf_value = 0.0;
  double t = 0.0;
};

ProtocolSetup build_protocol(const Effective& eff) {
  const eqr::InputDistribution inputs = inputs_from(eff);
  DeviceSetup ds = build_device(eff, inputs);

  // An explicit problem.behaviour overrides the device-derived expected
  // behaviour, so the trade-off function can be designed for a declared
  // model that the simulated device may or may not live up to.
  const json::json_pointer pb("/problem/behaviour");
  if (eff.has(pb)) {
    const Eigen::Vector2d ev = as_vec2(eff.get(pb), "problem.behaviour");
    ds.expected = eqr::Behaviour(ev(0), ev(1));
  }

  const int k = eff.value(json::json_pointer("/algorithm/k"), 16);
  eqr::TradeoffOptions topt;
  topt.energy_functional = ds.functional;
  topt.optimize_split =
      eff.value(json::json_pointer("/algorithm/optimize_split"), false);
  auto tf = eqr::make_tradeoff_function(ds.expected, ds.energies, inputs, k,
                                        topt);

  eqr::ProtocolConfig cfg;
  cfg.n = eff.value(json::json_pointer("/protocol/n"), 100000LL);
  cfg.inputs = inputs;
  cfg.energies = ds.energies;
  cfg.tf = tf;
  cfg.eps_t = eff.value(json::json_pointer("/protocol/eps_t"), 1e-6);
  cfg.eps_m = eff.value(json::json_pointer("/protocol/eps_m"), 1e-6);
  cfg.eps_ext = eff.value(json::json_pointer("/protocol/eps_ext"), 1e-9);
  cfg.eps_omega =
      eff.value(json::json_pointer("/protocol/eps_omega"), 1e-6);

  ProtocolSetup ps;
  ps.t = cfg.error();
  ps.tf_value = tf.value(ds.expected, ds.energies.avg);
  const json::json_pointer pr("/protocol/threshold_r");
  if (eff.has(pr)) {
    cfg.threshold_r = eff.get(pr).get<double>();
  } else {
    const double terms =
        eff.value(json::json_pointer("/protocol/error_terms"), 2.0);
    cfg.threshold_r = ps.tf_value - terms * ps.t;
  }
  cfg.sigma =
      eqr::plan(cfg.n, std::max(0.0, cfg.budget()), cfg.eps_ext).sigma;
  cfg.validate();
  ps.device = std::move(ds);
  ps.cfg = std::move(cfg);
  return ps;
}

int cmd_certify(const Effective& eff, const std::string& prefix) {
  const json cfg_doc = eff.merged();
  ProtocolSetup ps = build_protocol(eff);
  const std::uint64_t seed =
      eff.value(json::json_pointer("/protocol/seed"), 20260816ULL);

  const auto tr = eqr::run_protocol(ps.device.model, ps.cfg, seed);
  const bool pass = tr.decision == eqr::Decision::Pass;
  const double rate = eqr::surprisal_rate(tr.xi_mean, ps.cfg.tf,
                                          ps.cfg.energies, ps.t);

  std::string report_path, transcript_path, key_path;
  if (!prefix.empty()) {
    report_path = prefix + ".report.txt";
    transcript_path = prefix + ".transcript.csv";
    key_path = prefix + ".key.hex";
  }
  const json::json_pointer pout("/output");
  if (eff.has(pout)) {
    const json o = eff.get(pout);
    if (o.contains("report")) report_path = o["report"].get<std::string>();
    if (o.contains("transcript"))
      transcript_path = o["transcript"].get<std::string>();
    if (o.contains("key")) key_path = o["key"].get<std::string>();
  }

  {
    OutStream os(report_path);
    std::ostream& out = os.get();
    out.precision(12);
    out << "protocol certification report (eqr " << kVersion << ")\n";
    out << "config hash:      fnv1a-" << hash_hex(cfg_doc) << "\n";
    out << "rounds n:         " << ps.cfg.n << "\n";
    out << "seed:             " << seed << "\n";
    out << "tf value:         " << ps.tf_value << "\n";
    out << "error term t:     " << ps.t << "\n";
    out << "threshold r:      " << ps.cfg.threshold_r << "\n";
    out << "estimator mean:   " << tr.xi_mean << "\n";
    out << "certified rate:   " << rate << "\n";
    out << "min-entropy budget sigma_h: " << ps.cfg.budget() << "\n";
    out << "key length sigma: " << ps.cfg.sigma << "\n";
    out << "epsilons:         t=" << ps.cfg.eps_t << " m=" << ps.cfg.eps_m
        << " ext=" << ps.cfg.eps_ext << " omega=" << ps.cfg.eps_omega
        << "\n";
    out << "soundness total:  "
        << ps.cfg.eps_t + ps.cfg.eps_m + ps.cfg.eps_ext + ps.cfg.eps_omega
        << "\n";
    out << "decision:         " << (pass ? "pass" : "abort") << "\n";
    if (pass && ps.cfg.sigma > 0)
      out << "key bits:         " << tr.key.size() << "\n";
  }

  if (!transcript_path.empty()) {
    std::ofstream tf_out(transcript_path);
    if (!tf_out)
      throw ConfigError("cannot open '" + transcript_path + "'");
    write_meta(tf_out, "certify", cfg_doc, "round,x,a");
    for (std::size_t i = 0; i < tr.x.size(); ++i)
      tf_out << i << "," << static_cast<int>(tr.x[i]) << ","
             << static_cast<int>(tr.a[i]) << "\n";
  }
  if (!key_path.empty() && pass && ps.cfg.sigma > 0) {
    std::ofstream kf(key_path);
    if (!kf) throw ConfigError("cannot open '" + key_path + "'");
    kf << tr.key.to_hex() << "\n";
  }
  return pass ? 0 : 1;
}

// ------------------------------------------------------------ montecarlo

int cmd_montecarlo(const Effective& eff) {
  ProtocolSetup ps = build_protocol(eff);
  const long long trials =
      eff.value(json::json_pointer("/protocol/trials"), 1000LL);
  const std::uint64_t seed =
      eff.value(json::json_pointer("/protocol/seed"), 0x7e03c4ULL);

  const auto res =
      eqr::monte_carlo_theorem3(ps.device.model, ps.cfg, trials, seed);
  const double bound = ps.cfg.eps_t + ps.cfg.eps_omega;
  const double band =
      3.0 * std::sqrt(std::max(bound * (1.0 - bound), 0.0) /
                      static_cast<double>(trials));
  std::cout.precision(12);
  std::cout << "trials:              " << res.trials << "\n";
  std::cout << "violations:          " << res.violations << "\n";
  std::cout << "frequency:           " << res.frequency << "\n";
  std::cout << "guarantee eps_t+eps_omega: " << bound << "\n";
  std::cout << "acceptance band:     " << bound + band
            << " (+3 standard errors)\n";
  return res.frequency <= bound + band ? 0 : 1;
}

// ---------------------------------------------------------------- bellmap

int cmd_bellmap(const std::string& config_path,
                const std::vector<double>& e_flag,
                const std::vector<double>& w_flag,
                const std::vector<double>& bell_flag) {
  Effective eff(config_path);
  std::cout.precision(12);
  if (bell_flag.size() == 4) {
    const eqr::BellBehaviour bb(bell_flag[0], bell_flag[1], bell_flag[2],
                                bell_flag[3]);
    const auto [plus, minus] = eqr::chsh_values(bb);
    const bool member = eqr::bell_quantum_membership(bb);
    std::cout << "correlators: (" << bb.ab11 << ", " << bb.ab12 << ", "
              << bb.ab21 << ", " << bb.ab22 << ")\n";
    std::cout << "chsh:        (" << plus << ", " << minus << ")\n";
    std::cout << "membership:  " << (member ? "member" : "non-member")
              << "\n";
    return member ? 0 : 1;
  }
  if (e_flag.size() == 2)
    eff.set_default(json::json_pointer("/problem/behaviour"),
                    json{e_flag[0], e_flag[1]});
  if (w_flag.size() == 2)
    eff.set_default(json::json_pointer("/problem/energies/pk"),
                    json{w_flag[0], w_flag[1]});
  const json::json_pointer pb("/problem/behaviour");
  const json::json_pointer pw("/problem/energies/pk");
  if (!eff.has(pb) || !eff.has(pw))
    throw ConfigError("bellmap needs --bell, or --e and --w");
  const Eigen::Vector2d ev = as_vec2(eff.get(pb), "problem.behaviour");
  const Eigen::Vector2d w = as_vec2(eff.get(pw), "problem.energies.pk");
  const eqr::Behaviour b(ev(0), ev(1));
  const auto bb = eqr::pm_to_bell(b, w);
  const auto [plus, minus] = eqr::chsh_values(bb);
  const bool member = eqr::bell_image_quantum_membership(bb);
  std::cout << "image:       (" << bb.ab11 << ", " << bb.ab12 << ", "
            << bb.ab21 << ", " << bb.ab22 << ")\n";
  std::cout << "chsh:        (" << plus << ", " << minus << ")\n";
  std::cout << "membership (capped image): "
            << (member ? "member" : "non-member") << "\n";
  std::cout << "pm closed-form:            "
            << (eqr::in_quantum_set_closed_form(b, w) ? "member"
                                                      : "non-member")
            << "\n";
  return member ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-constrained quantum randomness toolkit"};
  app.set_version_flag("--version", std::string("eqr ") + kVersion);
  app.require_subcommand(1);

  // Shared option storage; each subcommand binds only what it uses.
  std::string config_path, out_path, json_path, prefix;
  std::vector<double> e_flag, w_flag, w_avg_flag, bell_flag, inputs_flag,
      functional_flag;
  double margin = 1e-7;
  int k = 0, figure = 0, points = 0, grid = 0, upper_grid = 0;
  bool min_entropy = false, optimize_split = false;
  std::string variant, device_type;
  double xi = 0.0, eta = 0.0, delta = 0.0;
  long long n = 0, trials = 0;
  std::uint64_t seed = 0;
  double eps_t = 0.0, eps_m = 0.0, eps_ext = 0.0, eps_omega = -1.0;
  double error_terms = 0.0, threshold_r = 0.0;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "JSON config file; values supersede flags");
  };
  auto add_problem = [&](CLI::App* sub) {
    sub->add_option("--e", e_flag, "behaviour correlations E1 E2")
        ->expected(2);
    sub->add_option("--w-pk", w_flag, "peak energy bounds W1 W2")
        ->expected(2);
    sub->add_option("--w-avg", w_avg_flag, "average energy bounds A1 A2")
        ->expected(2);
    sub->add_option("--inputs", inputs_flag, "input distribution p1 p2")
        ->expected(2);
    sub->add_option("--functional", functional_flag,
                    "averaged energy bound: coeff1 coeff2 value")
        ->expected(3);
  };

  CLI::App* mem = app.add_subcommand(
      "membership", "closed-form and SDP quantum-set membership");
  add_config(mem);
  mem->add_option("--e", e_flag, "behaviour correlations E1 E2")
      ->expected(2);
  mem->add_option("--w", w_flag, "peak energy bounds W1 W2")->expected(2);
  mem->add_option("--margin", margin, "SDP feasibility margin");

  CLI::App* ent = app.add_subcommand(
      "entropy", "entropy-bound queries and figure sweeps (CSV)");
  add_config(ent);
  add_problem(ent);
  ent->add_option("--figure", figure, "canned sweep: 3, 4, 6 or 7");
  ent->add_option("--k", k, "chord segments");
  ent->add_option("--points", points, "sweep points per curve");
  ent->add_option("--grid", grid, "figure-4 grid resolution per axis");
  ent->add_option("--upper-grid", upper_grid,
                  "decomposition grid for the upper bound column");
  ent->add_flag("--min-entropy", min_entropy,
                "also compute the min-entropy bound");
  ent->add_option("--out", out_path, "CSV output path (default stdout)");

  CLI::App* tof = app.add_subcommand(
      "tradeoff", "design a trade-off function at an expected behaviour");
  add_config(tof);
  add_problem(tof);
  tof->add_option("--k", k, "chord segments");
  tof->add_flag("--optimize-split", optimize_split,
                "minimize the estimator spread over the alpha split");
  tof->add_option("--variant", variant,
                  "variance variant: proof, statement, conservative");
  tof->add_option("--out", out_path, "report path (default stdout)");
  tof->add_option("--json", json_path, "machine-readable TF output path");

  CLI::App* cert = app.add_subcommand(
      "certify", "run the protocol on a simulated device and report");
  add_config(cert);
  add_problem(cert);
  cert->add_option("--device", device_type, "device model: bpsk or ook");
  cert->add_option("--xi", xi, "device amplitude");
  cert->add_option("--eta", eta, "detector efficiency");
  cert->add_option("--delta", delta, "declared energy margin (bpsk)");
  cert->add_option("--n", n, "protocol rounds");
  cert->add_option("--k", k, "chord segments for the TF");
  cert->add_option("--seed", seed, "master seed");
  cert->add_option("--eps-t", eps_t, "concentration epsilon");
  cert->add_option("--eps-m", eps_m, "smoothing epsilon");
  cert->add_option("--eps-ext", eps_ext, "extractor epsilon");
  cert->add_option("--eps-omega", eps_omega, "energy-assumption epsilon");
  cert->add_option("--error-terms", error_terms,
                   "threshold rule: r = tf_value - error_terms * t");
  cert->add_option("--r", threshold_r, "fixed threshold (overrides rule)");
  cert->add_option("--out-prefix", prefix,
                   "write PREFIX.report.txt, PREFIX.transcript.csv, "
                   "PREFIX.key.hex");

  CLI::App* mc = app.add_subcommand(
      "montecarlo", "empirical check of the concentration guarantee");
  add_config(mc);
  add_problem(mc);
  mc->add_option("--device", device_type, "device model: bpsk or ook");
  mc->add_option("--xi", xi, "device amplitude");
  mc->add_option("--eta", eta, "detector efficiency");
  mc->add_option("--delta", delta, "declared energy margin (bpsk)");
  mc->add_option("--n", n, "rounds per trial");
  mc->add_option("--k", k, "chord segments for the TF");
  mc->add_option("--trials", trials, "number of simulated experiments");
  mc->add_option("--seed", seed, "master seed");
  mc->add_option("--eps-t", eps_t, "concentration epsilon");
  mc->add_option("--eps-omega", eps_omega, "energy-assumption epsilon");

  CLI::App* bell = app.add_subcommand(
      "bellmap", "map a behaviour to Bell correlators and test membership");
  add_config(bell);
  bell->add_option("--e", e_flag, "behaviour correlations E1 E2")
      ->expected(2);
  bell->add_option("--w", w_flag, "peak energy bounds W1 W2")->expected(2);
  bell->add_option("--bell", bell_flag,
                   "raw correlators AB11 AB12 AB21 AB22")
      ->expected(4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (mem->parsed()) return cmd_membership(config_path, e_flag, w_flag,
                                             margin);

    // Build the effective config for the remaining commands from flags,
    // then let a config file supersede.
    Effective eff(config_path);
    if (e_flag.size() == 2)
      eff.set_default(json::json_pointer("/problem/behaviour"),
                      json{e_flag[0], e_flag[1]});
    if (w_flag.size() == 2)
      eff.set_default(json::json_pointer("/problem/energies/pk"),
                      json{w_flag[0], w_flag[1]});
    if (w_avg_flag.size() == 2)
      eff.set_default(json::json_pointer("/problem/energies/avg"),
                      json{w_avg_flag[0], w_avg_flag[1]});
    if (inputs_flag.size() == 2)
      eff.set_default(json::json_pointer("/problem/inputs"),
                      json{inputs_flag[0], inputs_flag[1]});
    if (functional_flag.size() == 3) {
      eff.set_default(
          json::json_pointer("/problem/energy_functional/coeffs"),
          json{functional_flag[0], functional_flag[1]});
      eff.set_default(json::json_pointer("/problem/energy_functional/value"),
                      functional_flag[2]);
    }
    if (k > 0) eff.set_default(json::json_pointer("/algorithm/k"), k);
    if (figure > 0)
      eff.set_default(json::json_pointer("/algorithm/figure"), figure);
    if (points > 0)
      eff.set_default(json::json_pointer("/algorithm/points"), points);
    if (grid > 0) eff.set_default(json::json_pointer("/algorithm/grid"), grid);
    if (upper_grid > 0)
      eff.set_default(json::json_pointer("/algorithm/upper_grid"),
                      upper_grid);
    if (min_entropy)
      eff.set_default(json::json_pointer("/algorithm/min_entropy"), true);
    if (optimize_split)
      eff.set_default(json::json_pointer("/algorithm/optimize_split"), true);
    if (!variant.empty())
      eff.set_default(json::json_pointer("/algorithm/variant"), variant);
    if (!device_type.empty()) {
      eff.set_default(json::json_pointer("/protocol/device/type"),
                      device_type);
      eff.set_default(json::json_pointer("/protocol/device/xi"), xi);
      eff.set_default(json::json_pointer("/protocol/device/eta"), eta);
      eff.set_default(json::json_pointer("/protocol/device/delta"), delta);
    }
    if (n > 0) eff.set_default(json::json_pointer("/protocol/n"), n);
    if (trials > 0)
      eff.set_default(json::json_pointer("/protocol/trials"), trials);
    if (seed > 0) eff.set_default(json::json_pointer("/protocol/seed"), seed);
    if (eps_t > 0)
      eff.set_default(json::json_pointer("/protocol/eps_t"), eps_t);
    if (eps_m > 0)
      eff.set_default(json::json_pointer("/protocol/eps_m"), eps_m);
    if (eps_ext > 0)
      eff.set_default(json::json_pointer("/protocol/eps_ext"), eps_ext);
    if (eps_omega >= 0)
      eff.set_default(json::json_pointer("/protocol/eps_omega"), eps_omega);
    if (error_terms > 0)
      eff.set_default(json::json_pointer("/protocol/error_terms"),
                      error_terms);
    if (cert->count("--r"))
      eff.set_default(json::json_pointer("/protocol/threshold_r"),
                      threshold_r);

    if (ent->parsed()) return cmd_entropy(eff, out_path);
    if (tof->parsed()) return cmd_tradeoff(eff, out_path, json_path);
    if (cert->parsed()) return cmd_certify(eff, prefix);
    if (mc->parsed()) return cmd_montecarlo(eff);
    if (bell->parsed())
      return cmd_bellmap(config_path, e_flag, w_flag, bell_flag);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
