#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.h"
#include "qlb/io.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qlb;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "qlb_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_json(const std::string& name, const json& value) {
  const fs::path path = temp_dir() / name;
  std::ofstream out(path);
  out << value.dump(2);
  return path.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parsed CSV without the comment header.
std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QLB_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

json default_identity_omega() {
  return {{"m", {{0.0, 0.0}, {0.0, 0.0}}}, {"dt", 1.0}};
}

json d005_omega(double dt) {
  return {{"m",
           {{0.0, 0.0, 0.0, 0.0},
            {0.0, -5.0 / 3.0, 0.0, 0.0},
            {0.0, 0.0, -5.0 / 3.0, 0.0},
            {0.0, 0.0, 0.0, -1.0}}},
          {"dt", dt}};
}

json matched_qsim_config() {
  // omega_matrix entries for D = 0.05 at U = 0 (−A in the velocity basis).
  const double d13 = 13.0 / 12.0, d7 = 7.0 / 12.0, q = 0.25;
  json m = {{-d13, q, d7, q}, {q, -d13, q, d7}, {d7, q, -d13, q}, {q, d7, q, -d13}};
  return {{"cutoff", 16},
          {"dt", 0.6},
          {"n_substeps", 1},
          {"n_steps", 5},
          {"theta", 0.25},
          {"collision", {{"type", "matrix"}, {"m", m}}},
          {"init",
           {{"eta", {0.5, 0.3, 0.15, 0.05}},
            {"gaussians",
             json::array({{{"x0", 0.0}, {"y0", 0.0}},
                          {{"x0", 0.0}, {"y0", 0.0}},
                          {{"x0", 0.0}, {"y0", 0.0}},
                          {{"x0", 0.0}, {"y0", 0.0}}})}}},
          {"herald_mode", "postselect"},
          {"seed", 11}};
}

json default_lb_config() {
  return {{"nx", 16},
          {"ny", 16},
          {"D", 0.05},
          {"velocity", {{"type", "constant"}, {"ux", 0.0}, {"uy", 0.0}}},
          {"init", {{"type", "gaussian"}, {"x0", 8.0}, {"y0", 8.0}, {"sigma", 2.0}}},
          {"steps", 20},
          {"sample_every", 5}};
}

}  // namespace

TEST_CASE("decompose: identity generator gives gamma 0 and zero residual") {
  const std::string omega = write_json("identity_omega.json", default_identity_omega());
  const std::string out = (temp_dir() / "identity_dec.json").string();
  cli::cmd_decompose({omega, std::nullopt, "auto", out, false});
  const json result = json::parse(slurp(out));
  CHECK(result.at("gamma").get<double>() == 0.0);
  CHECK(result.at("p_fail").get<double>() == 0.0);
  CHECK(result.at("reconstruction_residual").get<double>() <= 1e-12);
  CHECK(result.at("window").at("lower").get<double>() == 0.0);
  CHECK(result.at("window").at("upper").get<double>() == 2.0);
}

TEST_CASE("decompose: D = 0.05 four-speed window at dt = 0.6") {
  const std::string omega = write_json("d005_omega.json", d005_omega(0.6));
  const std::string out = (temp_dir() / "d005_dec.json").string();
  cli::cmd_decompose({omega, std::nullopt, "auto", out, false});
  const json result = json::parse(slurp(out));
  CHECK(result.at("window").at("lower").get<double>() ==
        doctest::Approx(0.632121).epsilon(1e-6));
  CHECK(result.at("window").at("upper").get<double>() ==
        doctest::Approx(1.367879).epsilon(1e-6));
  CHECK(result.at("u_alpha").size() == 4);
  CHECK(result.at("u_alpha")[0][0].size() == 2);  // [re, im] pairs
}

TEST_CASE("decompose: error taxonomy") {
  SUBCASE("malformed file is an input error") {
    const fs::path bad = temp_dir() / "malformed.json";
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_AS(
        cli::cmd_decompose({bad.string(), std::nullopt, "auto",
                            (temp_dir() / "x.json").string(), false}),
        io::InputError);
  }
  SUBCASE("unknown keys are rejected") {
    json omega = default_identity_omega();
    omega["extra"] = 1;
    const std::string path = write_json("unknown_key.json", omega);
    CHECK_THROWS_AS(
        cli::cmd_decompose({path, std::nullopt, "auto",
                            (temp_dir() / "x.json").string(), false}),
        io::InputError);
  }
  SUBCASE("gamma outside the window is a tolerance error") {
    const std::string omega = write_json("d005_omega2.json", d005_omega(0.6));
    CHECK_THROWS_AS(
        cli::cmd_decompose({omega, std::nullopt, "0.2",
                            (temp_dir() / "x.json").string(), false}),
        io::ToleranceError);
  }
}

TEST_CASE("CLI exit codes") {
  SUBCASE("success is 0") {
    const std::string omega = write_json("exit_omega.json", d005_omega(0.6));
    const std::string out = (temp_dir() / "exit_dec.json").string();
    CHECK(run_cli("decompose --omega " + omega + " --out " + out) == 0);
  }
  SUBCASE("infeasible gamma is 1") {
    const std::string omega = write_json("exit_omega1.json", d005_omega(0.6));
    CHECK(run_cli("decompose --omega " + omega + " --gamma 0.1 --out " +
                  (temp_dir() / "y.json").string()) == 1);
  }
  SUBCASE("malformed input is 2") {
    const fs::path bad = temp_dir() / "exit_malformed.json";
    std::ofstream(bad) << "{";
    CHECK(run_cli("decompose --omega " + bad.string() + " --out " +
                  (temp_dir() / "z.json").string()) == 2);
  }
  SUBCASE("bad flags are 2") {
    CHECK(run_cli("decompose --no-such-flag") == 2);
  }
}

TEST_CASE("fig2: monotone success and optimal gamma at ratio 1") {
  const std::string out = (temp_dir() / "fig2.csv").string();
  cli::Fig2Options opts;
  opts.seed = 7;
  opts.instances = 4;
  opts.out_path = out;
  cli::cmd_fig2(opts);

  const auto rows = read_csv(out);
  REQUIRE(rows.size() == 1 + 4 * 10);  // header + instances × n_max
  CHECK(rows[0][0] == "instance");
  std::map<int, std::vector<double>> p_step;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    p_step[std::stoi(rows[i][0])].push_back(std::stod(rows[i][2]));
  }
  for (const auto& [inst, ps] : p_step) {
    for (std::size_t i = 1; i < ps.size(); ++i) {
      CAPTURE(inst);
      CHECK(ps[i] >= ps[i - 1] - 1e-12);
    }
  }

  const auto sweep = read_csv(cli::gamma_sweep_path(out));
  REQUIRE(sweep.size() > 1);
  std::map<int, std::vector<double>> sweep_p;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    sweep_p[std::stoi(sweep[i][0])].push_back(std::stod(sweep[i][2]));
  }
  for (const auto& [inst, ps] : sweep_p) {
    for (std::size_t i = 1; i < ps.size(); ++i) {
      CAPTURE(inst);
      CHECK(ps[0] > ps[i]);  // maximal at gamma/gamma0 = 1
    }
  }
}

TEST_CASE("fig3: boundary rows and window monotonicity") {
  const std::string out = (temp_dir() / "fig3.csv").string();
  cli::Fig3Options opts;
  opts.out_path = out;
  cli::cmd_fig3(opts);
  const auto rows = read_csv(out);
  REQUIRE(rows.size() == 201);  // header + 200 samples
  // dt = 0 row: all deltas 1, window [0, 2].
  CHECK(std::stod(rows[1][0]) == 0.0);
  for (int k = 1; k <= 4; ++k) CHECK(std::stod(rows[1][k]) == 1.0);
  CHECK(std::stod(rows[1][5]) == 0.0);
  CHECK(std::stod(rows[1][6]) == 2.0);
  // gamma_lower increases, gamma_upper decreases toward 1.
  double prev_lower = -1.0, prev_upper = 3.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double lower = std::stod(rows[i][5]);
    const double upper = std::stod(rows[i][6]);
    CHECK(lower >= prev_lower - 1e-12);
    CHECK(upper <= prev_upper + 1e-12);
    prev_lower = lower;
    prev_upper = upper;
  }
  CHECK(prev_upper > 1.0);
}

TEST_CASE("lb run: zero-velocity pulse stays put, mass conserved") {
  const std::string config = write_json("lb_basic.json", default_lb_config());
  const std::string out = (temp_dir() / "lb_basic.csv").string();
  const std::string density = (temp_dir() / "lb_density.csv").string();
  cli::cmd_lb_run({config, out, density});
  const auto rows = read_csv(out);
  REQUIRE(rows.size() >= 4);
  const double mass0 = std::stod(rows[1][1]);
  const double mean0 = std::stod(rows[1][2]);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][1]) == doctest::Approx(mass0).epsilon(1e-12));
    CHECK(std::stod(rows[i][2]) == doctest::Approx(mean0).epsilon(1e-6));
  }
  const auto densities = read_csv(density);
  CHECK(densities.size() == 1 + 16 * 16);
}

TEST_CASE("lb run: config validation") {
  json config = default_lb_config();
  config["surprise"] = true;
  const std::string path = write_json("lb_bad.json", config);
  CHECK_THROWS_AS(cli::cmd_lb_run({path, (temp_dir() / "x.csv").string(), ""}),
                  io::InputError);

  json config2 = default_lb_config();
  config2["D"] = -1.0;
  const std::string path2 = write_json("lb_bad2.json", config2);
  CHECK_THROWS_AS(cli::cmd_lb_run({path2, (temp_dir() / "x.csv").string(), ""}),
                  io::InputError);
}

TEST_CASE("qsim run: moments and herald CSVs") {
  const std::string config = write_json("qsim_basic.json", matched_qsim_config());
  const std::string moments = (temp_dir() / "qsim_moments.csv").string();
  const std::string herald = (temp_dir() / "qsim_herald.csv").string();
  cli::cmd_qsim_run({config, moments, herald, "", ""});
  const auto mrows = read_csv(moments);
  REQUIRE(mrows.size() == 1 + 6);  // header + step 0..5
  CHECK(mrows[0][0] == "step");
  CHECK(mrows[0].size() == 23);
  const auto hrows = read_csv(herald);
  REQUIRE(hrows.size() == 1 + 5);
  CHECK(hrows[1][3] == "postselected");
}

TEST_CASE("qsim run: field and state dumps") {
  json config = matched_qsim_config();
  config["grid"] = {{"min", -3.0}, {"max", 3.0}, {"points", 7}};
  const std::string path = write_json("qsim_dumps.json", config);
  const std::string moments = (temp_dir() / "qd_m.csv").string();
  const std::string herald = (temp_dir() / "qd_h.csv").string();
  const std::string field = (temp_dir() / "qd_f.csv").string();
  const std::string state = (temp_dir() / "qd_s.csv").string();
  cli::cmd_qsim_run({path, moments, herald, field, state});

  const auto frows = read_csv(field);
  REQUIRE(frows.size() == 1 + 4 * 7 * 7);  // header + component × grid²
  CHECK(frows[0] == std::vector<std::string>{"component", "x1", "x2", "f"});

  const auto srows = read_csv(state);
  REQUIRE(srows.size() == 1 + 4 * 16 * 16);
  CHECK(srows[0] ==
        std::vector<std::string>{"component", "n_x", "n_y", "re", "im"});
  // Fock occupations are valid amplitudes.
  double norm2 = 0.0;
  for (std::size_t i = 1; i < srows.size(); ++i) {
    const double re = std::stod(srows[i][3]);
    const double im = std::stod(srows[i][4]);
    norm2 += re * re + im * im;
  }
  CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-9));

  // --field-out without a grid in the config is an input error.
  json no_grid = matched_qsim_config();
  const std::string path2 = write_json("qsim_nogrid.json", no_grid);
  CHECK_THROWS_AS(
      cli::cmd_qsim_run({path2, (temp_dir() / "m2.csv").string(),
                         (temp_dir() / "h2.csv").string(), field, ""}),
      io::InputError);
}

TEST_CASE("qsim run: theta and k_b are exclusive") {
  json config = matched_qsim_config();
  config["k_b"] = 1.0;
  const std::string path = write_json("qsim_bad.json", config);
  CHECK_THROWS_AS(
      cli::cmd_qsim_run({path, (temp_dir() / "m.csv").string(),
                         (temp_dir() / "h.csv").string(), "", ""}),
      io::InputError);
}

TEST_CASE("compare: matched configs pass, zero dynamics gives zero errors") {
  const std::string lb = write_json("cmp_lb.json", default_lb_config());
  json qsim = matched_qsim_config();
  const std::string q = write_json("cmp_qsim.json", qsim);
  const std::string report_path = (temp_dir() / "cmp_report.json").string();
  cli::cmd_compare({lb, q, report_path, false});
  const json report = json::parse(slurp(report_path));
  CHECK(report.at("pass").get<bool>());
  CHECK(report.at("collision_equivalence_error").get<double>() <= 1e-6);

  // Zero dynamics: no steps, no streaming.
  json qsim0 = matched_qsim_config();
  qsim0["n_steps"] = 0;
  qsim0["theta"] = 0.0;
  const std::string q0 = write_json("cmp_qsim0.json", qsim0);
  const std::string report0_path = (temp_dir() / "cmp_report0.json").string();
  cli::cmd_compare({lb, q0, report0_path, false});
  const json report0 = json::parse(slurp(report0_path));
  CHECK(report0.at("collision_equivalence_error").get<double>() <= 1e-14);
  CHECK(report0.at("streaming_displacement_error").get<double>() <= 1e-14);
  CHECK(report0.at("herald_product_error").get<double>() <= 1e-14);
}

TEST_CASE("compare: refuses mismatched physics") {
  json lb = default_lb_config();
  lb["D"] = 0.1;  // qsim matrix still encodes D = 0.05
  const std::string lb_path = write_json("cmp_lb_mismatch.json", lb);
  const std::string q = write_json("cmp_qsim_m.json", matched_qsim_config());
  CHECK_THROWS_AS(cli::cmd_compare({lb_path, q, "", false}), io::InputError);
}

TEST_CASE("seeded commands regenerate byte-identical output") {
  SUBCASE("fig2") {
    const std::string a = (temp_dir() / "det_fig2_a.csv").string();
    const std::string b = (temp_dir() / "det_fig2_b.csv").string();
    cli::Fig2Options opts;
    opts.seed = 99;
    opts.instances = 2;
    opts.out_path = a;
    cli::cmd_fig2(opts);
    opts.out_path = b;
    cli::cmd_fig2(opts);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(cli::gamma_sweep_path(a)) == slurp(cli::gamma_sweep_path(b)));
  }
  SUBCASE("qsim sample mode") {
    json config = matched_qsim_config();
    config["herald_mode"] = "sample";
    config["seed"] = 31415;
    config["n_steps"] = 20;
    config["theta"] = 0.05;
    const std::string path = write_json("det_qsim.json", config);
    const std::string ma = (temp_dir() / "det_m_a.csv").string();
    const std::string mb = (temp_dir() / "det_m_b.csv").string();
    const std::string ha = (temp_dir() / "det_h_a.csv").string();
    const std::string hb = (temp_dir() / "det_h_b.csv").string();
    cli::cmd_qsim_run({path, ma, ha, "", ""});
    cli::cmd_qsim_run({path, mb, hb, "", ""});
    CHECK(slurp(ma) == slurp(mb));
    CHECK(slurp(ha) == slurp(hb));
  }
}

TEST_CASE("QLB_OUT_DIR resolves relative outputs") {
  const fs::path dir = temp_dir() / "outdir";
  fs::create_directories(dir);
  setenv("QLB_OUT_DIR", dir.c_str(), 1);
  cli::Fig3Options opts;
  opts.samples = 5;
  opts.out_path = "envtest.csv";
  cli::cmd_fig3(opts);
  unsetenv("QLB_OUT_DIR");
  CHECK(fs::exists(dir / "envtest.csv"));
}
