// Command-line front end: solve, certify, levelsets, barrier, oracle.
//
// Exit codes: 0 certified / pass, 2 completed but uncertified / fail,
// 1 input or usage error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plg/plg.hpp"

namespace fs = std::filesystem;
using namespace plg;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kFail = 2;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

ScalarField load_u(const std::string& path, const GridDomain& dom) {
  auto u = parse_scalar_csv(read_text(path), path);
  if (u.field.nx() != dom.nx() || u.field.ny() != dom.ny())
    throw InputError(path + ": field is " + std::to_string(u.field.nx()) + "x" + std::to_string(u.field.ny()) +
                     ", problem grid is " + std::to_string(dom.nx()) + "x" + std::to_string(dom.ny()));
  for (const auto& c : dom.cells())
    if (!std::isfinite(u.field(c.i, c.j))) throw InputError(path + ": non-finite value on the mask");
  return std::move(u.field);
}

VectorField load_N(const std::string& path, const GridDomain& dom) {
  auto b = parse_vector_csv(read_text(path), path);
  if (b.field.nx() != dom.nx() || b.field.ny() != dom.ny())
    throw InputError(path + ": field is " + std::to_string(b.field.nx()) + "x" + std::to_string(b.field.ny()) +
                     ", problem grid is " + std::to_string(dom.nx()) + "x" + std::to_string(dom.ny()));
  for (const auto& c : dom.cells())
    if (!is_finite(b.field(c.i, c.j))) throw InputError(path + ": non-finite value on the mask");
  return std::move(b.field);
}

void print_certificate(const Certificate& c) {
  std::printf("certified=%s rel_gap=%.3e primal=%.10g dual=%.10g alignment=%.3e div=%.3e", c.certified ? "yes" : "no",
              c.rel_gap, c.primal, c.dual, c.alignment_defect, c.div_residual);
  if (!c.failures.empty()) {
    std::printf(" failed=");
    for (std::size_t k = 0; k < c.failures.size(); ++k) std::printf("%s%s", k ? "," : "", c.failures[k].c_str());
  }
  std::printf("\n");
}

int cmd_solve(const std::string& problem, const std::string& out, std::uint64_t seed, std::optional<long> max_iter) {
  ProblemFile pf = load_problem(problem);
  pf.solver.poincare.seed = seed;
  if (max_iter) pf.solver.max_iter = *max_iter;
  const auto res = solve(pf.spec, pf.solver);
  const auto cert = certify(res.u, res.N, pf.spec, pf.tolerances, res.N_faces);
  ensure_dir(out);
  const double h = pf.spec.dom.h();
  write_text(join(out, "u.csv"), scalar_csv(res.u, h));
  write_text(join(out, "N.csv"), vector_csv(res.N, h));
  if (pf.spec.dirichlet()) write_text(join(out, "N_faces.csv"), faces_csv(pf.spec.dom, res.N_faces));
  write_text(join(out, "gap_history.csv"), gap_history_csv(res.report.gap_history));

  auto j = certificate_json(cert);
  const auto& rp = res.report;
  j["iterations"] = rp.iterations;
  j["solver_rel_gap"] = std::isfinite(rp.rel_gap) ? nlohmann::ordered_json(rp.rel_gap) : nlohmann::ordered_json("inf");
  j["dual_feasible"] = rp.dual_feasible;
  j["diverging"] = rp.diverging;
  j["repair"] = rp.repair;
  j["existence_satisfied"] = rp.existence.satisfied;
  j["existence_margin"] = rp.existence.margin;
  j["c_omega"] = rp.existence.c_omega;
  j["h_inf"] = rp.existence.h_inf;
  write_text(join(out, "certificate.json"), j.dump(2) + "\n");

  print_certificate(cert);
  std::printf("iterations=%ld diverging=%s existence=%s\n", rp.iterations, rp.diverging ? "yes" : "no",
              rp.existence.satisfied ? "satisfied" : "not-satisfied");
  return cert.certified ? kOk : kFail;
}

int cmd_certify(const std::string& problem, const std::string& u_path, const std::string& n_path,
                const std::string& faces_path, const std::string& out) {
  const ProblemFile pf = load_problem(problem);
  const auto& dom = pf.spec.dom;
  const ScalarField u = load_u(u_path, dom);
  const VectorField N = load_N(n_path, dom);
  FaceData t;
  if (!faces_path.empty()) {
    if (!pf.spec.dirichlet()) throw InputError("--faces only applies to Dirichlet problems");
    t = parse_faces_csv(read_text(faces_path), dom, faces_path);
  }
  const auto cert = certify(u, N, pf.spec, pf.tolerances, t);
  const std::string text = certificate_json(cert).dump(2) + "\n";
  if (out.empty())
    std::cout << text;
  else
    write_text(out, text);
  print_certificate(cert);
  return cert.certified ? kOk : kFail;
}

std::vector<CellWindow> windows_for(const GridDomain& dom, const std::vector<int>& window, int size) {
  if (!window.empty()) {
    if (window.size() != 4) throw InputError("--window takes i0,j0,w,h");
    return {CellWindow{window[0], window[1], window[2], window[3]}};
  }
  if (size < 1) throw InputError("--window-size must be >= 1");
  std::vector<CellWindow> out;
  for (int j = 0; j + size <= dom.ny(); ++j)
    for (int i = 0; i + size <= dom.nx(); ++i) out.push_back({i, j, size, size});
  if (out.empty()) out.push_back({0, 0, dom.nx(), dom.ny()});
  return out;
}

int cmd_levelsets(const std::string& problem, const std::string& u_path, const std::vector<double>& lambdas,
                  const std::vector<int>& window, int window_size, const std::string& out) {
  const ProblemFile pf = load_problem(problem);
  const auto& dom = pf.spec.dom;
  const ScalarField u = load_u(u_path, dom);
  const auto wins = windows_for(dom, window, window_size);
  for (const auto& w : wins)
    if (w.cells(dom).size() > kMaxFreeCells) throw InputError("window holds more than 16 mask cells");
  ensure_dir(out);
  const ProblemSpec lp = level_set_problem(pf.spec);
  const Region region = level_set_region(pf.spec);
  std::string table = "lambda,cells,psi_perimeter,minimal,margin\n";
  bool all_minimal = true;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const double lam = lambdas[k];
    const CellSet E = superlevel(lp, u, lam);
    ScalarField ind = dom.scalar();
    for (const auto& c : dom.cells()) ind(c.i, c.j) = E.contains(c) ? 1.0 : 0.0;
    write_text(join(out, "set_" + std::to_string(k) + ".csv"), scalar_csv(ind, dom.h()));
    bool minimal = true;
    double margin = HUGE_VAL;
    for (const auto& w : wins) {
      const auto v = verify_superlevel_minimality(u, lam, pf.spec, w);
      minimal = minimal && v.minimal;
      margin = std::min(margin, v.margin);
    }
    all_minimal = all_minimal && minimal;
    table += format_double(lam) + "," + std::to_string(E.count(dom)) + "," + format_double(psi_perimeter(E, lp, region)) +
             "," + (minimal ? "true" : "false") + "," + format_double(margin) + "\n";
  }
  write_text(join(out, "levelsets.csv"), table);
  std::cout << table;
  return all_minimal ? kOk : kFail;
}

int cmd_barrier(const std::string& problem, int radius, const std::string& out) {
  const ProblemFile pf = load_problem(problem);
  const auto res = check_barrier_condition(pf.spec, radius);
  std::string table = "i,j,passes,ball_cells,minimizers,min_value,omega_value\n";
  bool all = true;
  for (const auto& r : res) {
    all = all && r.passes;
    table += std::to_string(r.cell.i) + "," + std::to_string(r.cell.j) + "," + (r.passes ? "true" : "false") + "," +
             std::to_string(r.ball_cells) + "," + std::to_string(r.minimizers) + "," + format_double(r.min_value) + "," +
             format_double(r.omega_value) + "\n";
  }
  if (out.empty())
    std::cout << table;
  else
    write_text(out, table);
  return all ? kOk : kFail;
}

int cmd_oracle(const std::string& problem, const std::vector<double>& levels, const std::string& out) {
  const ProblemFile pf = load_problem(problem);
  QuantizedSearchSpec q;
  if (!levels.empty()) q.levels = levels;
  const auto r = brute_force_primal(pf.spec, q);
  if (!out.empty()) write_text(out, scalar_csv(r.u_star, pf.spec.dom.h()));
  std::printf("value=%s candidates=%llu\n", format_double(r.value).c_str(), static_cast<unsigned long long>(r.candidates));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solver and verifier for anisotropic least-gradient problems with drift and source"};
  app.require_subcommand(1);
  std::uint64_t seed = 7;
  app.add_option("--seed", seed, "Seed for randomized estimates");

  std::string problem, out, u_path, n_path, faces_path;
  std::optional<long> max_iter;
  std::vector<double> lambdas, levels;
  std::vector<int> window;
  int window_size = 3;
  int radius = 2;

  auto* solve_cmd = app.add_subcommand("solve", "Solve a problem and write u, N, certificate and gap history");
  solve_cmd->add_option("problem", problem, "Problem file (YAML)")->required();
  solve_cmd->add_option("-o,--out", out, "Output directory")->required();
  solve_cmd->add_option("--max-iter", max_iter, "Override solver.max_iter");

  auto* cert_cmd = app.add_subcommand("certify", "Certify externally supplied fields");
  cert_cmd->add_option("problem", problem, "Problem file (YAML)")->required();
  cert_cmd->add_option("--u", u_path, "Primal field CSV")->required();
  cert_cmd->add_option("--N", n_path, "Dual field CSV")->required();
  cert_cmd->add_option("--faces", faces_path, "Dirichlet face fluxes CSV");
  cert_cmd->add_option("-o,--out", out, "Write the certificate JSON here instead of stdout");

  auto* ls_cmd = app.add_subcommand("levelsets", "Super-level sets, ψ-perimeters and minimality verdicts");
  ls_cmd->add_option("problem", problem, "Problem file (YAML)")->required();
  ls_cmd->add_option("--u", u_path, "Primal field CSV")->required();
  ls_cmd->add_option("--lambda", lambdas, "Levels (repeatable)")->required();
  ls_cmd->add_option("--window", window, "Single window i0,j0,w,h")->delimiter(',');
  ls_cmd->add_option("--window-size", window_size, "Side of the sliding square windows")->capture_default_str();
  ls_cmd->add_option("-o,--out", out, "Output directory")->required();

  auto* bar_cmd = app.add_subcommand("barrier", "Per-boundary-cell barrier condition table");
  bar_cmd->add_option("problem", problem, "Problem file (YAML)")->required();
  bar_cmd->add_option("--radius", radius, "Ball radius in cells")->capture_default_str();
  bar_cmd->add_option("-o,--out", out, "CSV output (default stdout)");

  auto* or_cmd = app.add_subcommand("oracle", "Exhaustive quantized minimization on tiny grids");
  or_cmd->add_option("problem", problem, "Problem file (YAML)")->required();
  or_cmd->add_option("--levels", levels, "Quantization levels")->delimiter(',');
  or_cmd->add_option("-o,--out", out, "Write the minimizer CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*solve_cmd) return cmd_solve(problem, out, seed, max_iter);
    if (*cert_cmd) return cmd_certify(problem, u_path, n_path, faces_path, out);
    if (*ls_cmd) return cmd_levelsets(problem, u_path, lambdas, window, window_size, out);
    if (*bar_cmd) return cmd_barrier(problem, radius, out);
    if (*or_cmd) return cmd_oracle(problem, levels, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  }
  return kInputError;
}
