#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

// Drives the installed binary end to end through std::system. EQR_CLI_PATH
// is injected by the build.

namespace {

namespace fs = std::filesystem;

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "eqr_cli_test";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunResult {
  int code = -1;
  std::string out;  // stdout and stderr combined
};

RunResult run_cli(const std::string& args, const std::string& env = "") {
  const fs::path cap = work_dir() / "capture.txt";
  std::string cmd;
  if (!env.empty()) cmd += env + " ";
  cmd += "\"" EQR_CLI_PATH "\" " + args + " > \"" + cap.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(cap);
  return r;
}

std::vector<std::string> split(const std::string& s, char sep) {
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

// Data rows of a CSV dump (comment lines stripped), split on commas.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& line : split(text, '\n')) {
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(split(line, ','));
  }
  return rows;
}

// Every number that strtod can find in the line, left to right.
std::vector<double> extract_doubles(const std::string& line) {
  std::vector<double> out;
  const char* p = line.c_str();
  const char* end = p + line.size();
  while (p < end) {
    char* next = nullptr;
    const double v = std::strtod(p, &next);
    if (next == p) {
      ++p;
    } else {
      out.push_back(v);
      p = next;
    }
  }
  return out;
}

std::string find_line(const std::string& text, const std::string& prefix) {
  for (const auto& line : split(text, '\n'))
    if (line.rfind(prefix, 0) == 0) return line;
  return {};
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("version flag and malformed invocations") {
  const auto ver = run_cli("--version");
  CHECK(ver.code == 0);
  CHECK(ver.out.find("eqr 1.0.0") != std::string::npos);

  CHECK(run_cli("").code == 2);                       // missing subcommand
  CHECK(run_cli("entropy --nonsense 1").code == 2);   // unknown flag
  CHECK(run_cli("membership").code == 2);             // missing --e/--w
}

TEST_CASE("membership verdicts and exit codes") {
  // Just inside the boundary 2 sqrt(w (1 - w)) ~ 0.916515 at w = 0.3.
  const auto boundary = run_cli("membership --e 0.9165 -0.9165 --w 0.3 0.3");
  CHECK(boundary.code == 0);
  CHECK(boundary.out.find("closed-form:  member") != std::string::npos);
  CHECK(boundary.out.find("sdp:          member") != std::string::npos);
  CHECK(boundary.out.find("margin:") != std::string::npos);

  // Perfectly anticorrelated with zero energy is impossible.
  const auto outside = run_cli("membership --e 1 -1 --w 0 0");
  CHECK(outside.code == 1);
  CHECK(outside.out.find("non-member") != std::string::npos);

  // Once the energy bounds sum to one the whole square is reachable.
  const auto corner = run_cli("membership --e 1 -1 --w 0.5 0.5");
  CHECK(corner.code == 0);
  CHECK(corner.out.find("closed-form:  member") != std::string::npos);
}

TEST_CASE("entropy single-point query matches the pinned value") {
  const fs::path out = work_dir() / "point.csv";
  const auto r = run_cli(
      "entropy --e 0.62 -0.62 --w-avg 0.3 0.3 --w-pk 1 1 --k 16 --out \"" +
      out.string() + "\"");
  REQUIRE(r.code == 0);
  const std::string text = slurp(out);
  CHECK(text.find("# eqr 1.0.0") != std::string::npos);
  CHECK(text.find("# command: entropy") != std::string::npos);
  CHECK(text.find("# config-hash: fnv1a-") != std::string::npos);
  CHECK(text.find("# columns: e1,e2,k,H_k,Hmin,H_upper") !=
        std::string::npos);
  const auto rows = csv_rows(text);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].size() == 6);
  CHECK(std::stod(rows[0][0]) == doctest::Approx(0.62));
  CHECK(std::stod(rows[0][2]) == doctest::Approx(16));
  CHECK(std::stod(rows[0][3]) ==
        doctest::Approx(0.000899440137).epsilon(1e-3));
  CHECK(rows[0][4].empty());  // Hmin not requested
  CHECK(rows[0][5].empty());  // upper bound not requested
}

TEST_CASE("entropy single point with min-entropy and upper-bound columns") {
  const fs::path out = work_dir() / "point_full.csv";
  const auto r = run_cli(
      "entropy --e 0.8 -0.8 --k 8 --min-entropy --upper-grid 500 --out \"" +
      out.string() + "\"");
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(slurp(out));
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].size() == 6);
  const double hk = std::stod(rows[0][3]);
  const double hmin = std::stod(rows[0][4]);
  const double hup = std::stod(rows[0][5]);
  CHECK(hk > 0.1);
  CHECK(hmin > 0.0);
  CHECK(hmin <= hk + 1e-8);      // min-entropy never beats Shannon
  CHECK(hup >= hk - 1e-6);       // upper bound brackets the lower bound
}

TEST_CASE("figure-3 sweep: classical zeros, k-monotone, thread-invariant") {
  const fs::path a = work_dir() / "fig3_a.csv";
  const fs::path b = work_dir() / "fig3_b.csv";
  const std::string args =
      "entropy --figure 3 --points 5 --out \"";
  REQUIRE(run_cli(args + a.string() + "\"").code == 0);
  REQUIRE(run_cli(args + b.string() + "\"", "EQR_THREADS=3").code == 0);

  // Worker count must not change a single byte of the output.
  CHECK(slurp(a) == slurp(b));

  const auto rows = csv_rows(slurp(a));
  REQUIRE(rows.size() == 20);  // 5 points x k in {2, 4, 8, 16}
  std::map<double, std::map<int, double>> h;  // e_minus -> k -> H_k
  for (const auto& row : rows) {
    REQUIRE(row.size() == 3);
    h[std::stod(row[0])][std::stoi(row[1])] = std::stod(row[2]);
  }
  REQUIRE(h.size() == 5);
  for (const auto& [em, by_k] : h) {
    REQUIRE(by_k.size() == 4);
    double prev = -1.0;
    for (const auto& [k, hk] : by_k) {
      if (em <= 0.6)
        CHECK(hk <= 1e-9);  // classical region certifies nothing
      CHECK(hk >= prev - 1e-9);  // more chords never certify less
      prev = hk;
    }
    if (em > 0.65) CHECK(by_k.at(16) > 1e-3);
  }
}

TEST_CASE("figure-4 sweep: zero entropy exactly on the classical region") {
  const fs::path out = work_dir() / "fig4.csv";
  const auto r = run_cli("entropy --figure 4 --grid 5 --k 8 --out \"" +
                         out.string() + "\"");
  REQUIRE(r.code == 0);
  const std::string text = slurp(out);
  CHECK(text.find("# rows outside the quantum set are omitted") !=
        std::string::npos);
  const auto rows = csv_rows(text);
  REQUIRE(rows.size() >= 15);
  REQUIRE(rows.size() <= 50);
  bool saw_a = false, saw_b = false, saw_positive = false;
  for (const auto& row : rows) {
    REQUIRE(row.size() == 5);
    const bool variant_a = row[0] == "a";
    if (variant_a)
      saw_a = true;
    else
      saw_b = true;
    const double hk = std::stod(row[3]);
    const bool classical = row[4] == "1";
    if (classical)
      CHECK(hk <= 1e-7);
    else
      CHECK(hk > 1e-7);
    if (hk > 0.01) saw_positive = true;
  }
  CHECK(saw_a);
  CHECK(saw_b);
  CHECK(saw_positive);
}

TEST_CASE("figure-6 sweep: a looser declared energy never helps") {
  const fs::path out = work_dir() / "fig6.csv";
  const auto r = run_cli("entropy --figure 6 --points 3 --k 8 --out \"" +
                         out.string() + "\"");
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(slurp(out));
  REQUIRE(rows.size() == 18);  // 2 etas x 3 deltas x 3 points
  // (eta, mu) -> delta -> H
  std::map<std::pair<double, double>, std::map<double, double>> h;
  for (const auto& row : rows) {
    REQUIRE(row.size() == 4);
    h[{std::stod(row[0]), std::stod(row[2])}][std::stod(row[1])] =
        std::stod(row[3]);
  }
  REQUIRE(h.size() == 6);
  double best = 0.0;
  for (const auto& [key, by_delta] : h) {
    REQUIRE(by_delta.size() == 3);
    double prev = 2.0;
    for (const auto& [delta, hk] : by_delta) {
      CHECK(hk >= 0.0);
      CHECK(hk <= prev + 1e-9);  // nonincreasing in the declared margin
      prev = hk;
      best = std::max(best, hk);
    }
  }
  CHECK(best > 0.01);
}

TEST_CASE("tradeoff report and machine-readable output") {
  const fs::path rep = work_dir() / "tf.txt";
  const fs::path js = work_dir() / "tf.json";
  const auto r = run_cli(
      "tradeoff --e 0.8 -0.8 --w-avg 0.3 0.3 --w-pk 1 1 --k 16 --out \"" +
      rep.string() + "\" --json \"" + js.string() + "\"");
  REQUIRE(r.code == 0);
  const std::string report = slurp(rep);
  CHECK(report.find("trade-off function (k = 16") != std::string::npos);
  CHECK(report.find("value at expected behaviour") != std::string::npos);

  const auto doc = nlohmann::json::parse(slurp(js));
  CHECK(doc.at("beta")[0].get<double>() ==
        doctest::Approx(0.449721414174).epsilon(1e-6));
  CHECK(doc.at("beta")[1].get<double>() ==
        doctest::Approx(-0.449721414174).epsilon(1e-6));
  CHECK(doc.at("gamma")[0].get<double>() <= 1e-12);
  CHECK(doc.at("gamma")[1].get<double>() <= 1e-12);
  CHECK(doc.at("v").get<double>() ==
        doctest::Approx(17.2386138884).epsilon(1e-5));
  CHECK(doc.at("value_at_expected").get<double>() ==
        doctest::Approx(0.0899440177573).epsilon(1e-4));
  CHECK(doc.at("config_hash").get<std::string>().size() == 16);
}

TEST_CASE("certify: honest device passes, extracts a key, reproducibly") {
  const std::string config = R"({
  "problem": {
    "behaviour": [0.8, -0.8],
    "energies": {"avg": [0.3, 0.3], "pk": [0.3, 0.3]}
  },
  "algorithm": {"k": 8},
  "protocol": {
    "n": 80000,
    "seed": 77,
    "eps_ext": 1e-9,
    "device": {
      "type": "iid",
      "components": [
        {"weight": 1.0, "behaviour": [0.8, -0.8], "omega": [0.3, 0.3]}
      ],
      "declared_avg_compliant": true
    }
  }
})";
  const fs::path cfg = work_dir() / "honest.json";
  write_file(cfg, config);

  const fs::path p1 = work_dir() / "run1";
  const auto r1 = run_cli("certify --config \"" + cfg.string() +
                          "\" --out-prefix \"" + p1.string() + "\"");
  CHECK(r1.code == 0);

  const std::string report = slurp(p1.string() + ".report.txt");
  CHECK(find_line(report, "decision:").find("pass") != std::string::npos);
  CHECK(find_line(report, "config hash:").find("fnv1a-") !=
        std::string::npos);
  const auto sigma_nums =
      extract_doubles(find_line(report, "key length sigma:"));
  REQUIRE(sigma_nums.size() == 1);
  const long long sigma = static_cast<long long>(sigma_nums[0]);
  CHECK(sigma > 2000);

  // Key file holds sigma bits as hex, two characters per byte.
  const std::string key = slurp(p1.string() + ".key.hex");
  const std::size_t hex_chars = 2 * ((static_cast<std::size_t>(sigma) + 7) / 8);
  CHECK(key.find_first_not_of("0123456789abcdef\n") == std::string::npos);
  CHECK(key.size() == hex_chars + 1);  // trailing newline

  // Transcript: one row per round plus comment header.
  const std::string transcript = slurp(p1.string() + ".transcript.csv");
  CHECK(csv_rows(transcript).size() == 80000);

  // Second run with the same config reproduces every byte.
  const fs::path p2 = work_dir() / "run2";
  const auto r2 = run_cli("certify --config \"" + cfg.string() +
                          "\" --out-prefix \"" + p2.string() + "\"");
  CHECK(r2.code == 0);
  CHECK(slurp(p2.string() + ".key.hex") == key);
  CHECK(slurp(p2.string() + ".transcript.csv") == transcript);
  CHECK(slurp(p2.string() + ".report.txt") == report);
}

TEST_CASE("certify: classical device aborts against a fixed threshold") {
  // The trade-off function is designed for the declared behaviour
  // (0.62, -0.62); the device actually plays a classical point, so its
  // score cannot reach the fixed threshold.
  const std::string config = R"({
  "problem": {
    "behaviour": [0.62, -0.62],
    "energies": {"avg": [0.3, 0.3], "pk": [1, 1]}
  },
  "algorithm": {"k": 8},
  "protocol": {
    "n": 5000,
    "seed": 3,
    "threshold_r": 0.05,
    "device": {
      "type": "iid",
      "components": [
        {"weight": 1.0, "behaviour": [0.3, -0.3], "omega": [0.045, 0.045]}
      ],
      "declared_avg_compliant": true
    }
  }
})";
  const fs::path cfg = work_dir() / "classical.json";
  write_file(cfg, config);
  const fs::path p = work_dir() / "abort";
  const auto r = run_cli("certify --config \"" + cfg.string() +
                         "\" --out-prefix \"" + p.string() + "\"");
  CHECK(r.code == 1);
  const std::string report = slurp(p.string() + ".report.txt");
  CHECK(find_line(report, "decision:").find("abort") != std::string::npos);
  CHECK_FALSE(fs::exists(p.string() + ".key.hex"));
}

TEST_CASE("certify: malformed configs are rejected with exit 2") {
  const fs::path cfg = work_dir() / "bad.json";
  write_file(cfg, R"({"problem": {"behavior": [0.5, -0.5]}})");  // misspelled
  CHECK(run_cli("certify --config \"" + cfg.string() + "\"").code == 2);
  CHECK(run_cli("certify --device nosuch --xi 0.5").code == 2);
}

TEST_CASE("montecarlo stays inside the guarantee on an honest device") {
  const auto r = run_cli(
      "montecarlo --device bpsk --xi 0.5 --eta 0.9 --delta 0.01 "
      "--n 2000 --k 8 --trials 100 --eps-t 0.01 --seed 5");
  CHECK(r.code == 0);
  CHECK(r.out.find("violations:") != std::string::npos);
  CHECK(r.out.find("guarantee eps_t+eps_omega:") != std::string::npos);
}

TEST_CASE("bellmap: image of a physical point and raw correlator modes") {
  const auto img = run_cli("bellmap --e 0.6 -0.6 --w 0.3 0.3");
  CHECK(img.code == 0);
  const auto image = extract_doubles(find_line(img.out, "image:"));
  REQUIRE(image.size() == 4);
  CHECK(image[0] == doctest::Approx(0.6));
  CHECK(image[1] == doctest::Approx(-0.4));
  CHECK(image[2] == doctest::Approx(-0.6));
  CHECK(image[3] == doctest::Approx(-0.4));
  const auto chsh = extract_doubles(find_line(img.out, "chsh:"));
  REQUIRE(chsh.size() == 2);
  CHECK(chsh[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(find_line(img.out, "membership (capped image):").find("member") !=
        std::string::npos);

  CHECK(run_cli("bellmap --bell 0.5 0.5 0.5 -0.5").code == 0);
  const auto outside = run_cli("bellmap --bell 0.9 0.9 0.9 -0.9");
  CHECK(outside.code == 1);
  CHECK(outside.out.find("non-member") != std::string::npos);
}
