#include "hflab/harness.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hflab/fracmom.hpp"
#include "hflab/regularity.hpp"
#include "hflab/saw.hpp"
#include "hflab/rng.hpp"
#include "hflab/threshold.hpp"

namespace hflab::harness {

const char* kCodeVersion = "0.1.0";

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

json metric_to_json(const Metric& m) {
  return json{{"kind", m.name()}, {"kappa", m.kappa}};
}

json model_to_json(const DisorderModel& m) {
  json j{{"kind", m.name()},
         {"c1", m.c1()},
         {"eps1", m.eps1()},
         {"eps2", m.eps2()}};
  const auto p = m.params();
  switch (m.kind()) {
    case DisorderModel::Kind::cauchy: j["scale"] = p[0]; break;
    case DisorderModel::Kind::two_sided_exponential: j["c_rho"] = p[0]; break;
    case DisorderModel::Kind::uniform_test: j["half_width"] = p[0]; break;
    case DisorderModel::Kind::perturbed_exponential:
      j["c"] = p[0];
      j["alpha"] = p[1];
      j["k"] = p[2];
      j["eps"] = p[3];
      break;
  }
  return j;
}

DisorderModel model_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  DisorderModel m = DisorderModel::two_sided_exponential(1.0);
  if (kind == "cauchy")
    m = DisorderModel::cauchy(j.at("scale").get<double>());
  else if (kind == "two_sided_exponential")
    m = DisorderModel::two_sided_exponential(j.at("c_rho").get<double>());
  else if (kind == "uniform_test")
    m = DisorderModel::uniform(j.at("half_width").get<double>());
  else if (kind == "perturbed_exponential")
    m = DisorderModel::perturbed_exponential(
        j.at("c").get<double>(), j.at("alpha").get<double>(),
        j.at("k").get<double>(), j.at("eps").get<double>());
  else
    throw std::invalid_argument("unknown disorder model kind: " + kind);
  if (j.contains("c1"))
    m.declare_constants(j.value("c1", m.c1()), j.value("eps1", m.eps1()),
                        j.value("eps2", m.eps2()));
  return m;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json f{{"kind", c.spec.f.name()}, {"eta", c.spec.f.eta}};
  if (c.spec.f.kind == FSpec::Kind::fermi_dirac) {
    f["beta"] = c.spec.f.beta;
    f["mu_bar"] = c.spec.f.mu_bar;
  } else {
    f["offset"] = c.spec.f.offset;
    f["amp"] = c.spec.f.amp;
    f["freq"] = c.spec.f.freq;
  }
  json spec{{"d", c.spec.dim},
            {"L", c.spec.half_width},
            {"lambda", c.spec.lambda},
            {"g", c.spec.g},
            {"f", f},
            {"kernel",
             {{"kind", c.spec.kernel.name()},
              {"C_a", c.spec.kernel.C_a},
              {"gamma_a", c.spec.kernel.gamma_a}}},
            {"metric", metric_to_json(c.spec.metric)},
            {"model", model_to_json(c.spec.model)}};
  json exp{{"s", c.s},
           {"z_imag", c.z_imag},
           {"energy", c.energy},
           {"max_distance", c.max_distance},
           {"volume_l", c.volume_l},
           {"volume_reference_l", c.volume_reference_l},
           {"sweep_g", c.sweep_g},
           {"v_grid_lo", c.v_grid_lo},
           {"v_grid_hi", c.v_grid_hi},
           {"v_grid_points", c.v_grid_points},
           {"saw_n_max", c.saw_n_max},
           {"saw_dim", c.saw_dim},
           {"weak_e_lo", c.weak_e_lo},
           {"weak_e_hi", c.weak_e_hi},
           {"weak_e_points", c.weak_e_points},
           {"weak_s", c.weak_s},
           {"weak_mu", c.weak_mu}};
  return json{{"spec", spec},
              {"seed", c.seed},
              {"samples", c.samples},
              {"out", c.out_dir},
              {"experiment", exp}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  const json& s = j.at("spec");
  c.spec.dim = s.at("d").get<int>();
  c.spec.half_width = s.at("L").get<int>();
  c.spec.lambda = s.at("lambda").get<double>();
  c.spec.g = s.at("g").get<double>();
  const json& f = s.at("f");
  const double eta = f.at("eta").get<double>();
  if (f.at("kind").get<std::string>() == "fermi_dirac")
    c.spec.f = FSpec::fermi_dirac(f.at("beta").get<double>(),
                                  f.value("mu_bar", 0.0), eta);
  else
    c.spec.f = FSpec::analytic_test(f.value("offset", 0.0), f.value("amp", 0.0),
                                    f.value("freq", 0.0), eta);
  const json& k = s.at("kernel");
  const std::string kk = k.at("kind").get<std::string>();
  if (kk == "kronecker")
    c.spec.kernel.kind = KernelSpec::Kind::kronecker;
  else if (kk == "nearest_neighbor")
    c.spec.kernel.kind = KernelSpec::Kind::nearest_neighbor;
  else if (kk == "exponential")
    c.spec.kernel.kind = KernelSpec::Kind::exponential;
  else if (kk == "log_polynomial")
    c.spec.kernel.kind = KernelSpec::Kind::log_polynomial;
  else
    throw std::invalid_argument("unknown kernel kind: " + kk);
  c.spec.kernel.C_a = k.value("C_a", 1.0);
  c.spec.kernel.gamma_a = k.value("gamma_a", 2.0);
  const json& mt = s.at("metric");
  c.spec.metric.kind = mt.at("kind").get<std::string>() == "ell1"
                           ? Metric::Kind::ell1
                           : Metric::Kind::scaled_log;
  c.spec.metric.kappa = mt.value("kappa", 1.0);
  c.spec.model = model_from_json(s.at("model"));
  c.seed = j.value("seed", c.seed);
  c.samples = j.value("samples", c.samples);
  c.out_dir = j.value("out", c.out_dir);
  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    c.s = e.value("s", c.s);
    c.z_imag = e.value("z_imag", c.z_imag);
    c.energy = e.value("energy", c.energy);
    c.max_distance = e.value("max_distance", c.max_distance);
    c.volume_l = e.value("volume_l", c.volume_l);
    c.volume_reference_l = e.value("volume_reference_l", c.volume_reference_l);
    c.sweep_g = e.value("sweep_g", c.sweep_g);
    c.v_grid_lo = e.value("v_grid_lo", c.v_grid_lo);
    c.v_grid_hi = e.value("v_grid_hi", c.v_grid_hi);
    c.v_grid_points = e.value("v_grid_points", c.v_grid_points);
    c.saw_n_max = e.value("saw_n_max", c.saw_n_max);
    c.saw_dim = e.value("saw_dim", c.saw_dim);
    c.weak_e_lo = e.value("weak_e_lo", c.weak_e_lo);
    c.weak_e_hi = e.value("weak_e_hi", c.weak_e_hi);
    c.weak_e_points = e.value("weak_e_points", c.weak_e_points);
    c.weak_s = e.value("weak_s", c.weak_s);
    c.weak_mu = e.value("weak_mu", c.weak_mu);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  in >> j;
  return config_from_json(j);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  const std::string dump = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json* cur = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) cur = &((*cur)[parts[i]]);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (...) {
    parsed = value;  // bare string
  }
  (*cur)[parts.back()] = parsed;
}

OutputFile::OutputFile(const std::filesystem::path& path,
                       const ExperimentConfig& c)
    : final_path_(path), tmp_path_(path.string() + ".tmp") {
  char head[128];
  std::snprintf(head, sizeof head,
                "# config_hash=%016llx\n# code_version=%s\n# seed=%llu\n",
                static_cast<unsigned long long>(config_hash(c)), kCodeVersion,
                static_cast<unsigned long long>(c.seed));
  buffer_ = head;
}

void OutputFile::line(const std::string& s) { buffer_ += s + "\n"; }

void OutputFile::close() {
  if (!open_) return;
  open_ = false;
  std::filesystem::create_directories(final_path_.parent_path());
  {
    std::ofstream out(tmp_path_, std::ios::binary | std::ios::trunc);
    out << buffer_;
    if (!out) throw std::runtime_error("write failed: " + tmp_path_.string());
  }
  std::filesystem::rename(tmp_path_, final_path_);
}

OutputFile::~OutputFile() {
  try {
    if (open_) close();
  } catch (...) {
  }
}

namespace {

std::filesystem::path out_path(const ExperimentConfig& c, const char* name) {
  return std::filesystem::path(c.out_dir) / name;
}

std::vector<double> make_v_grid(const ExperimentConfig& c) {
  std::vector<double> g(static_cast<std::size_t>(c.v_grid_points));
  for (int i = 0; i < c.v_grid_points; ++i)
    g[static_cast<std::size_t>(i)] =
        c.v_grid_lo +
        (c.v_grid_hi - c.v_grid_lo) * i / (c.v_grid_points - 1.0);
  return g;
}

double mu_d_for_dim(int dim) {
  if (dim == 1) return 1.0;
  const int n_max = dim == 2 ? 14 : 10;
  return connective_estimate(saw_enumerate(dim, n_max)).mu_hat;
}

int cmd_validate(const ExperimentConfig& c) {
  const ValidityReport r = validity_check(c.spec);
  const AssumptionReport a6 = check_assumption6(c.spec.model);
  OutputFile out(out_path(c, "validity.txt"), c);
  for (const auto& [k, v] : r.flat()) out.line(k + " = " + fmt(v));
  out.line(std::string("assumption6_ok = ") + (a6.pass ? "1" : "0"));
  out.line("assumption6_c1_found = " + fmt(a6.constant_found));
  out.line("assumption6_fluct_sup = " + fmt(a6.fluct_sup));
  if (c.spec.model.has_exponential_envelope()) {
    const AssumptionReport a7 = check_assumption7(c.spec.model);
    out.line(std::string("assumption7_ok = ") + (a7.pass ? "1" : "0"));
    out.line("assumption7_eps2_found = " + fmt(a7.constant_found));
  }
  out.close();
  std::cout << (r.core_ok && a6.pass ? "all core checks pass\n"
                                     : "inadmissible configuration\n");
  return r.core_ok && a6.pass ? 0 : 2;
}

int cmd_solve_effpot(const ExperimentConfig& c) {
  const Box box = c.spec.box();
  const Realization om = sample(c.spec.model, c.seed, box);
  const EffectivePotentialSolution sol = solve_fixed_point(c.spec, om);
  OutputFile out(out_path(c, "veff.csv"), c);
  std::string head = "v_eff";
  for (int i = c.spec.dim; i > 0; --i) head = "x" + std::to_string(i) + "," + head;
  out.line(head);
  for (int i = 0; i < box.size(); ++i) {
    std::string row;
    for (int x : box.site(i)) row += std::to_string(x) + ",";
    row += fmt(sol.v_eff[static_cast<std::size_t>(i)]);
    out.line(row);
  }
  out.close();
  OutputFile trace(out_path(c, "effpot_trace.csv"), c);
  trace.line("iteration,residual");
  for (std::size_t i = 0; i < sol.residuals.size(); ++i)
    trace.line(std::to_string(i + 1) + "," + fmt(sol.residuals[i]));
  trace.line(std::to_string(sol.residuals.size() + 1) + "," +
             fmt(sol.final_residual));
  trace.close();
  std::cout << "converged in " << sol.iterations
            << " iterations, final residual " << fmt(sol.final_residual)
            << "\n";
  return 0;
}

int cmd_cond_density(const ExperimentConfig& c) {
  const Box box = c.spec.box();
  const Realization om = sample(c.spec.model, c.seed, box);
  const Site origin(static_cast<std::size_t>(c.spec.dim), 0);
  const int n0 = box.index_of(origin);
  const ConditionalDensityEstimate est =
      conditional_density(c.spec, om, n0, make_v_grid(c));
  OutputFile out(out_path(c, "cond_density.csv"), c);
  out.line("v,rho_eff");
  for (std::size_t i = 0; i < est.v_grid.size(); ++i)
    out.line(fmt(est.v_grid[i]) + "," + fmt(est.rho[i]));
  out.close();
  OutputFile meta(out_path(c, "cond_density_meta.txt"), c);
  meta.line("n0_box_index = " + fmt(est.n0));
  meta.line("normalization_residual = " + fmt(est.normalization_residual));
  meta.line("alpha_lo = " + fmt(est.alpha_lo));
  meta.line("alpha_hi = " + fmt(est.alpha_hi));
  meta.close();
  std::cout << "normalization residual " << fmt(est.normalization_residual)
            << "\n";
  return 0;
}

int cmd_saw(const ExperimentConfig& c) {
  const SawTable t = saw_enumerate(c.saw_dim, c.saw_n_max);
  OutputFile out(out_path(c, "saw_counts.csv"), c);
  out.line("N,C_N");
  for (int n = 0; n <= t.n_max; ++n)
    out.line(std::to_string(n) + "," +
             std::to_string(t.counts[static_cast<std::size_t>(n)]));
  out.close();
  const ConnectiveEstimate est = connective_estimate(t);
  OutputFile diag(out_path(c, "saw_diagnostics.csv"), c);
  diag.line("N,root,ratio");
  for (std::size_t i = 0; i < est.roots.size(); ++i)
    diag.line(std::to_string(i + 1) + "," + fmt(est.roots[i]) + "," +
              (i < est.ratios.size() ? fmt(est.ratios[i]) : std::string("")));
  diag.close();
  std::cout << "mu_hat = " << fmt(est.mu_hat) << "\n";
  return 0;
}

int cmd_threshold(const ExperimentConfig& c) {
  OutputFile out(out_path(c, "threshold.csv"), c);
  out.line("label,M,mu_d,lambda_star,residual,tangent,branch_ok");
  auto row = [&](const std::string& label, double m, double mu) {
    const ThresholdResult t = solve_threshold(m, mu);
    out.line(label + "," + fmt(t.m) + "," + fmt(t.mu) + "," +
             fmt(t.lambda_star) + "," + fmt(t.residual) + "," +
             std::to_string(t.tangent ? 1 : 0) + "," +
             std::to_string(t.branch_ok ? 1 : 0));
    return t.lambda_star;
  };
  row("reference_2M_1_mu_1", 0.5, 1.0);
  const double mu_d = mu_d_for_dim(c.spec.dim);
  const ValidityReport v = validity_check(c.spec);
  row("anderson", c.spec.model.sup_density(), mu_d);
  const double hf = row("hartree_fock", v.m_inf_bound_tight, mu_d);
  out.close();
  std::cout << "lambda_HF = " << fmt(hf) << "\n";
  return 0;
}

int cmd_weak_threshold(const ExperimentConfig& c) {
  // decoupling table from the measured conditional density when g != 0,
  // otherwise from the model density; envelope supplies the tails
  DecouplingOptions dopt;
  std::function<double(double)> rho;
  if (c.spec.model.has_exponential_envelope()) {
    dopt.tail_rate = c.spec.model.c_rho() * 0.9;
    dopt.tail_prefactor = c.spec.model.sup_density() * 2.0;
  } else {
    dopt.tail_rate = 0.0;  // cauchy handled by the wide window
    dopt.window = 2e3;
  }
  if (c.spec.g != 0.0) {
    const Box box = c.spec.box();
    const Realization om = sample(c.spec.model, c.seed, box);
    const Site origin(static_cast<std::size_t>(c.spec.dim), 0);
    const ConditionalDensityEstimate est = conditional_density(
        c.spec, om, box.index_of(origin), make_v_grid(c));
    const std::vector<double> grid = est.v_grid;
    const std::vector<double> dens = est.rho;
    const DisorderModel model = c.spec.model;
    rho = [grid, dens, model](double v) {
      if (v <= grid.front() || v >= grid.back()) return model.density(v);
      const double step = grid[1] - grid[0];
      const std::size_t i = std::min(
          static_cast<std::size_t>((v - grid.front()) / step), grid.size() - 2);
      const double t = (v - grid[i]) / step;
      return dens[i] * (1.0 - t) + dens[i + 1] * t;
    };
  } else {
    const DisorderModel model = c.spec.model;
    rho = [model](double v) { return model.density(v); };
  }
  const DecouplingTable tab = estimate_d_s1(rho, c.weak_s, dopt);
  std::vector<double> deltas{1e-1, 1e-2, 1e-3};
  const WeakThresholdResult w =
      weak_threshold(c.weak_e_lo, c.weak_e_hi, c.weak_e_points, tab,
                     c.spec.dim, c.weak_mu, deltas);
  OutputFile out(out_path(c, "weak_threshold.csv"), c);
  out.line("s,mu,worst_E,sum,tail_bound,certified,lambda_hat");
  for (const auto& r : w.rows)
    out.line(fmt(r.s) + "," + fmt(r.mu) + "," + fmt(r.worst_e) + "," +
             fmt(r.sum) + "," + fmt(r.tail_bound) + "," +
             std::to_string(r.certified ? 1 : 0) + "," + fmt(r.lambda_hat));
  out.line("lambda0," + fmt(w.lambda0) + ",,,,," + fmt(w.lambda0));
  out.close();
  std::cout << "lambda0 = " << fmt(w.lambda0) << "\n";
  return 0;
}

int cmd_frac_moment(const ExperimentConfig& c) {
  const Site origin(static_cast<std::size_t>(c.spec.dim), 0);
  const Complex z(c.energy, c.z_imag);
  std::vector<MomentEstimate> points;
  OutputFile out(out_path(c, "frac_moment.csv"), c);
  out.line("dist,mean,stderr,samples,seed");
  const int kmax = std::min(c.max_distance, c.spec.half_width);
  for (int k = 0; k <= kmax; ++k) {
    Site n = origin;
    n[0] = k;
    const MomentEstimate e = mc_frac_moment(c.spec, origin, n, z, c.s,
                                            c.samples, hflab::rng::mix(c.seed, k));
    out.line(fmt(e.dist) + "," + fmt(e.mean) + "," + fmt(e.std_error) + "," +
             std::to_string(e.samples) + "," + std::to_string(e.base_seed));
    if (k >= 1) points.push_back(e);
  }
  out.close();
  const DecayFit fit = decay_fit(points);
  OutputFile f(out_path(c, "frac_moment_fit.txt"), c);
  f.line("rate = " + fmt(fit.rate));
  f.line("rate_std_error = " + fmt(fit.rate_std_error));
  f.line("log_prefactor = " + fmt(fit.log_prefactor));
  f.line("r2 = " + fmt(fit.r2));
  f.line("points_used = " + fmt(fit.points_used));
  f.close();
  std::cout << "fitted rate " << fmt(fit.rate) << " +- "
            << fmt(fit.rate_std_error) << ", R2 " << fmt(fit.r2) << "\n";
  return 0;
}

int cmd_correlator(const ExperimentConfig& c) {
  const Site origin(static_cast<std::size_t>(c.spec.dim), 0);
  std::vector<MomentEstimate> points;
  OutputFile out(out_path(c, "correlator.csv"), c);
  out.line("dist,mean,stderr,samples,seed");
  const int kmax = std::min(c.max_distance, c.spec.half_width);
  for (int k = 0; k <= kmax; ++k) {
    Site n = origin;
    n[0] = k;
    const MomentEstimate e =
        mc_correlator(c.spec, origin, n, -1e9, 1e9, c.samples,
                      hflab::rng::mix(c.seed, 1000 + k));
    out.line(fmt(e.dist) + "," + fmt(e.mean) + "," + fmt(e.std_error) + "," +
             std::to_string(e.samples) + "," + std::to_string(e.base_seed));
    if (k >= 1) points.push_back(e);
  }
  out.close();
  const DecayFit fit = decay_fit(points);
  OutputFile f(out_path(c, "correlator_fit.txt"), c);
  f.line("rate = " + fmt(fit.rate));
  f.line("rate_std_error = " + fmt(fit.rate_std_error));
  f.line("r2 = " + fmt(fit.r2));
  f.close();
  std::cout << "fitted correlator rate " << fmt(fit.rate) << "\n";
  return 0;
}

int cmd_volume_convergence(const ExperimentConfig& c) {
  const auto rows = volume_convergence(c.spec, c.volume_l,
                                       c.volume_reference_l, c.seed);
  OutputFile out(out_path(c, "volume_convergence.csv"), c);
  out.line("L,boundary_dist,veff_diff,veff_ref_curve,green_diff,green_ref_curve");
  for (const auto& r : rows)
    out.line(std::to_string(r.half_width) + "," + fmt(r.boundary_dist) + "," +
             fmt(r.veff_diff) + "," + fmt(r.veff_bound) + "," +
             fmt(r.green_diff) + "," + fmt(r.green_bound));
  out.close();
  std::cout << rows.size() << " box pairs\n";
  return 0;
}

int cmd_stability_sweep(const ExperimentConfig& c) {
  const double mu_d = mu_d_for_dim(c.spec.dim);
  const auto rows = stability_sweep(c.spec, c.sweep_g, mu_d);
  OutputFile out(out_path(c, "stability.csv"), c);
  out.line("g,vartheta,M_inf,lambda_hf,lambda_and,gap");
  for (const auto& r : rows)
    out.line(fmt(r.g) + "," + fmt(r.vartheta) + "," + fmt(r.m_inf) + "," +
             fmt(r.lambda_hf) + "," + fmt(r.lambda_and) + "," + fmt(r.gap));
  out.close();
  std::cout << "final gap " << fmt(rows.back().gap) << "\n";
  return 0;
}

// minimal CSV reader for the files this tool writes
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int cmd_report(const ExperimentConfig& c) {
  OutputFile rep(out_path(c, "summary.txt"), c);
  OutputFile dat(out_path(c, "decay_curves.dat"), c);
  dat.line("# dist mean stderr  (blocks: frac_moment, correlator)");
  for (const char* name : {"frac_moment.csv", "correlator.csv"}) {
    const auto p = out_path(c, name);
    if (!std::filesystem::exists(p)) continue;
    const auto rows = read_csv(p);
    rep.line(std::string(name) + ": " + std::to_string(rows.size() ? rows.size() - 1 : 0) +
             " rows");
    bool first = true;
    for (const auto& r : rows) {
      if (first) {  // header row
        first = false;
        continue;
      }
      if (r.size() >= 3) dat.line(r[0] + " " + r[1] + " " + r[2]);
    }
    dat.line("");
  }
  for (const char* name :
       {"validity.txt", "stability.csv", "threshold.csv", "saw_counts.csv",
        "volume_convergence.csv", "weak_threshold.csv", "cond_density.csv"}) {
    const auto p = out_path(c, name);
    if (!std::filesystem::exists(p)) continue;
    rep.line(std::string(name) + ": present");
  }
  rep.close();
  dat.close();
  std::cout << "report written\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"disordered Hartree-Fock laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int samples = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON config path");
  app.add_option("--seed", seed, "override the seed");
  app.add_option("--samples", samples, "override the sample count");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--override", overrides, "key.path=value config overrides");

  const std::vector<std::pair<std::string, int (*)(const ExperimentConfig&)>>
      commands = {{"validate", cmd_validate},
                  {"solve-effpot", cmd_solve_effpot},
                  {"cond-density", cmd_cond_density},
                  {"saw", cmd_saw},
                  {"threshold", cmd_threshold},
                  {"weak-threshold", cmd_weak_threshold},
                  {"frac-moment", cmd_frac_moment},
                  {"correlator", cmd_correlator},
                  {"volume-convergence", cmd_volume_convergence},
                  {"stability-sweep", cmd_stability_sweep},
                  {"report", cmd_report}};
  std::string chosen;
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->callback([&chosen, name = name]() { chosen = name; });
  }

  std::vector<std::string> argv_like = args;
  try {
    std::vector<const char*> argv{"hflab"};
    for (const auto& a : argv_like) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());

    ExperimentConfig cfg;
    json j = config_path.empty() ? to_json(cfg)
                                 : [&] {
                                     std::ifstream in(config_path);
                                     if (!in)
                                       throw std::runtime_error(
                                           "cannot open config: " + config_path);
                                     json x;
                                     in >> x;
                                     return x;
                                   }();
    for (const auto& o : overrides) apply_override(j, o);
    cfg = config_from_json(j);
    if (seed != 0) cfg.seed = seed;
    if (samples != 0) cfg.samples = samples;
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    for (const auto& [name, fn] : commands)
      if (name == chosen) return fn(cfg);
    throw std::runtime_error("no subcommand selected");
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << "{\"error\":\"" << e.what() << "\",\"command\":\"" << chosen
              << "\"}\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\",\"command\":\"" << chosen
              << "\"}\n";
    return 1;
  }
}

}  // namespace hflab::harness
