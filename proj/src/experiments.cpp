#include "spinsq/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "parallel.hpp"
#include "spinsq/errors.hpp"

namespace spinsq {

namespace {

using std::numbers::pi;

constexpr double kHorizonMargin = 1.2;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_cell(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else return quote_csv(v);
      },
      cell);
}

double time_unit(const LMGModel& m) { return 1.0 / (m.chi * m.n_spins); }

MinimizeOptions quick(const MinimizeOptions& base) {
  MinimizeOptions o = base;
  o.record_trace = false;
  return o;
}

// Optimal time of the effective TAT dynamics a design engineers.
double effective_optimal_time(const LMGModel& model, const PulseDesign& d,
                              const HarnessOptions& options, Propagator& prop) {
  const DickeSpace space(model.n_spins);
  return minimize_over_time(effective_hamiltonian(d, space),
                            coherent_state(space, d.initial_angles()), time_unit(model),
                            quick(options.minimize), prop)
      .t_min;
}

// Samples xi^2 at every cycle boundary; stops recording if the mean spin
// vanishes. Returns the values; NaN marks unrecorded cycles.
std::vector<double> run_and_sample(SpinState state, const PulseSchedule& sched,
                                   const SpinOperator& h, const RotationKit& kit,
                                   Propagator& prop) {
  std::vector<double> values(sched.cycle_count + 1, std::numeric_limits<double>::quiet_NaN());
  bool dead = false;
  prop.run_schedule(state, sched, h, kit, 1, [&](int cycle, double, const SpinState& s) {
    if (dead) return;
    try {
      values[cycle] = squeezing_parameter(s).xi2;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MeanSpinVanished) throw;
      dead = true;
    }
  });
  return values;
}

// First local minimum of the finite prefix; falls back to the smallest
// sample when none is bracketed.
std::pair<int, bool> locate_minimum(const std::vector<double>& values) {
  std::vector<double> finite;
  for (double v : values) {
    if (std::isnan(v)) break;
    finite.push_back(v);
  }
  int idx = first_local_minimum(finite, false);
  if (idx >= 0) return {idx, true};
  idx = static_cast<int>(std::min_element(finite.begin(), finite.end()) - finite.begin());
  return {idx, false};
}

nlohmann::json model_json(const LMGModel& m) {
  nlohmann::json frame = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) frame.push_back({m.frame(r, 0), m.frame(r, 1), m.frame(r, 2)});
  return {{"chi", m.chi},
          {"gamma", m.gamma},
          {"n_spins", m.n_spins},
          {"sign_flipped", m.sign_flipped},
          {"dropped_constant", m.dropped_constant},
          {"frame", frame}};
}

nlohmann::json design_json(const PulseDesign& d) {
  return {{"axis", std::string(to_string(d.axis))},
          {"branch", std::string(to_string(d.branch))},
          {"ratio_t2_t1", d.ratio_t2_t1},
          {"chi_eff", d.chi_eff},
          {"effective_form", d.effective_form()},
          {"stationary_axis", std::string(to_string(d.stationary_axis))},
          {"already_tat", d.already_tat}};
}

PulseSchedule build_schedule(const LMGModel& model, const PulseDesign& d, double horizon,
                             const HarnessOptions& options) {
  return schedule(d, model, horizon * time_unit(model), options.max_step, options.cycles);
}

}  // namespace

// ---------------------------------------------------------------------------
// Tables

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorKind::InvalidArgument, "table '" + name + "': row has " +
                                                std::to_string(row.size()) + " cells, expected " +
                                                std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::size_t Table::column_index(std::string_view column) const {
  const auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) {
    throw Error(ErrorKind::InvalidArgument,
                "table '" + name + "' has no column '" + std::string(column) + "'");
  }
  return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, std::string_view column) const {
  const Cell& c = rows.at(row).at(column_index(column));
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  throw Error(ErrorKind::InvalidArgument, "cell is not numeric");
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += quote_csv(columns[i]);
  }
  out += "\r\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_cell(row[i]);
    }
    out += "\r\n";
  }
  return out;
}

const Table& ExperimentResult::table(std::string_view name) const {
  for (const auto& t : tables)
    if (t.name == name) return t;
  throw Error(ErrorKind::InvalidArgument, "no table named '" + std::string(name) + "'");
}

void write_result(const ExperimentResult& result, const nlohmann::json& descriptor,
                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " +
                                   ec.message());
  }
  auto write = [&](const std::string& file, const std::string& text) {
    std::ofstream out(dir / file, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorKind::Io, "failed to write " + (dir / file).string());
  };
  write("descriptor.json", descriptor.dump(2) + "\n");
  for (const auto& t : result.tables) write(t.name + ".csv", t.to_csv());
}

// ---------------------------------------------------------------------------
// Numerics helpers

std::vector<double> linspace(double lo, double hi, int points) {
  if (points < 1) throw Error(ErrorKind::InvalidArgument, "grid needs at least one point");
  if (points == 1) return {lo};
  std::vector<double> v(points);
  for (int i = 0; i < points; ++i) v[i] = lo + (hi - lo) * i / (points - 1);
  v.back() = hi;
  return v;
}

double to_db(double xi2) { return 10.0 * std::log10(xi2); }

std::pair<double, double> log_log_fit(const std::vector<double>& x,
                                      const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "log-log fit needs two or more paired points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

SqueezingTrace pulsed_trace(const LMGModel& model, const PulseDesign& d, double horizon,
                            const HarnessOptions& options, Propagator& prop) {
  const DickeSpace space(model.n_spins);
  const PulseSchedule sched = build_schedule(model, d, horizon, options);
  const RotationKit kit(space);
  const std::vector<double> values =
      run_and_sample(coherent_state(space, d.initial_angles()), sched,
                     realize_hamiltonian(model, space), kit, prop);
  SqueezingTrace trace;
  const double tc = sched.cycle_time();
  for (std::size_t k = 0; k < values.size() && !std::isnan(values[k]); ++k) {
    SqueezingSample s;
    s.t = k * tc;
    s.xi2 = values[k];
    trace.samples.push_back(s);
  }
  const auto [idx, bracketed] = locate_minimum(values);
  trace.t_min = idx * tc;
  trace.xi2_min = values[idx];
  return trace;
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentResult evolve_experiment(const LMGModel& model, const BlochAngles& initial,
                                   const HarnessOptions& options) {
  MinimizeOptions opts = options.minimize;
  opts.record_trace = true;
  const SqueezingTrace trace = minimize_over_time(model, initial, opts);
  const double unit = time_unit(model);

  ExperimentResult r;
  r.experiment = "evolve";
  Table t{"trace",
          {"t", "tau", "xi2", "mean_x", "mean_y", "mean_z", "contrast", "axis_x", "axis_y",
           "axis_z"},
          {}};
  for (const auto& s : trace.samples) {
    t.add_row({s.t, s.t / unit, s.xi2, s.mean_spin(0), s.mean_spin(1), s.mean_spin(2),
               s.contrast, s.min_variance_axis(0), s.min_variance_axis(1),
               s.min_variance_axis(2)});
  }
  Table m{"minimum", {"t_min", "tau_min", "xi2_min", "xi2_min_db"}, {}};
  m.add_row({trace.t_min, trace.t_min / unit, trace.xi2_min, to_db(trace.xi2_min)});
  r.tables = {std::move(t), std::move(m)};
  r.xi2_min = trace.xi2_min;
  r.t_min = trace.t_min;
  r.metadata["model"] = model_json(model);
  r.metadata["initial"] = {{"theta", initial.theta}, {"phi", initial.phi}};
  return r;
}

namespace {

struct GridOutcome {
  double xi2_min = 1.0;
  double t_min = 0.0;
  bool squeezed = false;
};

std::vector<GridOutcome> scan_grid(const LMGModel& model, const std::vector<double>& thetas,
                                   const std::vector<double>& phis,
                                   const HarnessOptions& options, Propagator& prop) {
  const DickeSpace space(model.n_spins);
  const SpinOperator h = realize_hamiltonian(model, space);
  prop.eigensystem(h);  // warm the cache before fanning out
  const MinimizeOptions opts = quick(options.minimize);
  std::vector<GridOutcome> out(thetas.size() * phis.size());
  detail::parallel_for(out.size(), options.workers, [&](std::size_t i) {
    const BlochAngles a{thetas[i / phis.size()], phis[i % phis.size()]};
    try {
      const auto trace =
          minimize_over_time(h, coherent_state(space, a), time_unit(model), opts, prop);
      out[i] = {trace.xi2_min, trace.t_min, true};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoMinimumFound) throw;
      out[i] = {1.0, 0.0, false};
    }
  });
  return out;
}

std::size_t argmin_outcome(const std::vector<GridOutcome>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i].xi2_min < v[best].xi2_min) best = i;
  return best;
}

}  // namespace

ExperimentResult sweep_initial_state(const LMGModel& model,
                                     const std::vector<double>& theta_grid,
                                     const std::vector<double>& phi_grid,
                                     const HarnessOptions& options) {
  if (theta_grid.empty() || phi_grid.empty()) {
    throw Error(ErrorKind::InvalidArgument, "empty theta or phi grid");
  }
  Propagator prop;
  const auto outcomes = scan_grid(model, theta_grid, phi_grid, options, prop);
  const double unit = time_unit(model);

  ExperimentResult r;
  r.experiment = "sweep-initial-state";
  Table grid{"grid", {"theta", "phi", "xi2_min", "t_min", "tau_min", "squeezed"}, {}};
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    grid.add_row({theta_grid[i / phi_grid.size()], phi_grid[i % phi_grid.size()], o.xi2_min,
                  o.t_min, o.t_min / unit, std::int64_t{o.squeezed}});
  }
  const std::size_t best = argmin_outcome(outcomes);
  Table opt{"optimum", {"theta0", "phi0", "xi2_min", "t_min", "tau_min"}, {}};
  opt.add_row({theta_grid[best / phi_grid.size()], phi_grid[best % phi_grid.size()],
               outcomes[best].xi2_min, outcomes[best].t_min, outcomes[best].t_min / unit});
  r.tables = {std::move(grid), std::move(opt)};
  r.xi2_min = outcomes[best].xi2_min;
  r.t_min = outcomes[best].t_min;
  r.metadata["model"] = model_json(model);
  return r;
}

ExperimentResult sweep_optimal_angles(int n_spins, double chi,
                                      const std::vector<double>& gammas,
                                      const std::vector<double>& theta_grid,
                                      const std::vector<double>& phi_grid,
                                      const HarnessOptions& options) {
  ExperimentResult r;
  r.experiment = "sweep-initial-state";
  Table t{"optimum_vs_gamma", {"gamma", "theta0", "phi0", "xi2_min", "t_min", "tau_min"}, {}};
  for (double g : gammas) {
    const LMGModel m = make_model(chi, g, n_spins);
    Propagator prop;
    const auto outcomes = scan_grid(m, theta_grid, phi_grid, options, prop);
    const std::size_t best = argmin_outcome(outcomes);
    t.add_row({g, theta_grid[best / phi_grid.size()], phi_grid[best % phi_grid.size()],
               outcomes[best].xi2_min, outcomes[best].t_min,
               outcomes[best].t_min / time_unit(m)});
  }
  r.tables = {std::move(t)};
  return r;
}

ExperimentResult sweep_gamma(int n_spins, const std::vector<double>& gamma_grid, double chi,
                             const HarnessOptions& options) {
  for (double g : gamma_grid) {
    if (!(g >= 0.0 && g <= 0.5)) {
      throw Error(ErrorKind::InvalidArgument, "gamma grid must lie within [0, 0.5]");
    }
  }
  std::vector<SqueezingTrace> traces(gamma_grid.size());
  const MinimizeOptions opts = quick(options.minimize);
  detail::parallel_for(gamma_grid.size(), options.workers, [&](std::size_t i) {
    traces[i] = minimize_over_time(make_model(chi, gamma_grid[i], n_spins),
                                   {pi / 2, pi / 2}, opts);
  });

  ExperimentResult r;
  r.experiment = "sweep-gamma";
  const double unit = 1.0 / (chi * n_spins);
  Table t{"gamma_sweep", {"gamma", "xi2_min", "xi2_min_db", "t_min", "tau_min"}, {}};
  bool xi_monotone = true;
  bool t_monotone = true;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    t.add_row({gamma_grid[i], traces[i].xi2_min, to_db(traces[i].xi2_min), traces[i].t_min,
               traces[i].t_min / unit});
    if (i > 0 && gamma_grid[i] > gamma_grid[i - 1]) {
      xi_monotone = xi_monotone && traces[i].xi2_min <= traces[i - 1].xi2_min;
      t_monotone = t_monotone && traces[i].t_min <= traces[i - 1].t_min;
    }
  }
  r.tables = {std::move(t)};
  const auto best = std::min_element(traces.begin(), traces.end(), [](auto& a, auto& b) {
    return a.xi2_min < b.xi2_min;
  });
  r.xi2_min = best->xi2_min;
  r.t_min = best->t_min;
  r.metadata["xi2_min_nonincreasing_in_gamma"] = xi_monotone;
  r.metadata["t_min_nonincreasing_in_gamma"] = t_monotone;
  return r;
}

ExperimentResult compare_pulsed(const LMGModel& model, Axis reference_axis,
                                const HarnessOptions& options) {
  const PulseDesign ref = design(model, reference_axis, options.branch);
  const PulseDesign dz = design(model, Axis::Z, options.branch);
  const PulseDesign dy = design(model, Axis::Y, options.branch);
  const DickeSpace space(model.n_spins);
  const double unit = time_unit(model);
  const BlochAngles lmg_initial{pi / 2, pi / 2};

  Propagator prop;
  const SpinOperator h_lmg = realize_hamiltonian(model, space);
  const SpinOperator h_ref = effective_hamiltonian(ref, space);
  const MinimizeOptions opts = quick(options.minimize);
  const SqueezingTrace lmg_min =
      minimize_over_time(h_lmg, coherent_state(space, lmg_initial), unit, opts, prop);
  const SqueezingTrace ref_min = minimize_over_time(
      h_ref, coherent_state(space, ref.initial_angles()), unit, opts, prop);

  double horizon = 0.0;
  if (options.horizon) {
    horizon = *options.horizon;
  } else {
    const double slowest =
        std::max({lmg_min.t_min, ref_min.t_min, effective_optimal_time(model, dz, options, prop),
                  effective_optimal_time(model, dy, options, prop)});
    horizon = kHorizonMargin * slowest / unit;
  }

  // All traces share the grid t_k = k t_c.
  const PulseSchedule sz = build_schedule(model, dz, horizon, options);
  const PulseSchedule sy = build_schedule(model, dy, horizon, options);
  const RotationKit kit(space);
  const auto z_values =
      run_and_sample(coherent_state(space, dz.initial_angles()), sz, h_lmg, kit, prop);
  const auto y_values =
      run_and_sample(coherent_state(space, dy.initial_angles()), sy, h_lmg, kit, prop);

  const double tc = sz.cycle_time();
  const int samples = sz.cycle_count + 1;
  const auto lmg_eigen = prop.eigensystem(h_lmg);
  const auto ref_eigen = prop.eigensystem(h_ref);
  const Vector lmg0 = coherent_state(space, lmg_initial).amplitudes;
  const Vector ref0 = coherent_state(space, ref.initial_angles()).amplitudes;
  std::vector<double> lmg_values(samples);
  std::vector<double> ref_values(samples);
  detail::parallel_for(samples, options.workers, [&](std::size_t k) {
    const double t = k * tc;
    auto xi2_or_nan = [&](const HermitianEigensystem& e, const Vector& v0) {
      try {
        return squeezing_parameter({space, e.propagate(t, v0)}).xi2;
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::MeanSpinVanished) throw;
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    lmg_values[k] = xi2_or_nan(*lmg_eigen, lmg0);
    ref_values[k] = xi2_or_nan(*ref_eigen, ref0);
  });

  ExperimentResult r;
  r.experiment = "compare-pulsed";
  Table traces{"traces", {"t", "tau", "lmg", "tat_ref", "z_pulsed", "y_pulsed"}, {}};
  for (int k = 0; k < samples; ++k) {
    traces.add_row({k * tc, k * tc / unit, lmg_values[k], ref_values[k], z_values[k],
                    y_values[k]});
  }

  Table minima{"minima", {"variant", "xi2_min", "xi2_min_db", "t_min", "tau_min", "bracketed"},
               {}};
  auto add_min = [&](const std::string& name, double xi2, double t, bool bracketed) {
    minima.add_row({name, xi2, to_db(xi2), t, t / unit, std::int64_t{bracketed}});
  };
  add_min("lmg", lmg_min.xi2_min, lmg_min.t_min, true);
  add_min("tat_ref", ref_min.xi2_min, ref_min.t_min, true);
  const auto [zi, zb] = locate_minimum(z_values);
  const auto [yi, yb] = locate_minimum(y_values);
  add_min("z_pulsed", z_values[zi], zi * tc, zb);
  add_min("y_pulsed", y_values[yi], yi * tc, yb);

  Table designs{"designs",
                {"axis", "branch", "ratio_t2_t1", "chi_eff", "effective_form", "initial_theta",
                 "initial_phi", "t1", "t2", "cycles"},
                {}};
  for (const auto* pair : {&dz, &dy}) {
    const PulseSchedule& s = pair == &dz ? sz : sy;
    const BlochAngles a = pair->initial_angles();
    designs.add_row({std::string(to_string(pair->axis)), std::string(to_string(pair->branch)),
                     pair->ratio_t2_t1, pair->chi_eff, pair->effective_form(), a.theta, a.phi,
                     s.t1, s.t2, std::int64_t{s.cycle_count}});
  }

  r.tables = {std::move(traces), std::move(minima), std::move(designs)};
  const bool z_ref = reference_axis == Axis::Z;
  r.xi2_min = z_ref ? z_values[zi] : y_values[yi];
  r.t_min = (z_ref ? zi : yi) * tc;
  r.metadata["model"] = model_json(model);
  r.metadata["reference_design"] = design_json(ref);
  r.metadata["horizon_tau"] = horizon;
  r.metadata["cycle_time"] = tc;
  return r;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::OAT: return "OAT";
    case Variant::TAT: return "TAT";
    case Variant::LMG: return "LMG";
    case Variant::Pulsed: return "pulsed";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "OAT" || name == "oat") return Variant::OAT;
  if (name == "TAT" || name == "tat") return Variant::TAT;
  if (name == "LMG" || name == "lmg") return Variant::LMG;
  if (name == "pulsed" || name == "PULSED") return Variant::Pulsed;
  throw Error(ErrorKind::InvalidArgument, "unknown variant '" + std::string(name) + "'");
}

ExperimentResult scaling_study(double gamma, const std::vector<int>& n_grid,
                               const std::vector<Variant>& variants, double chi,
                               Axis pulse_axis, const HarnessOptions& options) {
  if (n_grid.size() < 2 || !std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end()) {
    throw Error(ErrorKind::InvalidArgument, "n_grid must be strictly ascending with >= 2 entries");
  }
  const std::size_t jobs = n_grid.size() * variants.size();
  std::vector<SqueezingTrace> results(jobs);
  detail::parallel_for(jobs, options.workers, [&](std::size_t i) {
    const int n = n_grid[i / variants.size()];
    const Variant v = variants[i % variants.size()];
    const BlochAngles y_axis{pi / 2, pi / 2};
    const MinimizeOptions opts = quick(options.minimize);
    switch (v) {
      case Variant::OAT: results[i] = minimize_over_time(make_model(chi, 0.0, n), y_axis, opts); break;
      case Variant::TAT: results[i] = minimize_over_time(make_model(chi, 0.5, n), y_axis, opts); break;
      case Variant::LMG: results[i] = minimize_over_time(make_model(chi, gamma, n), y_axis, opts); break;
      case Variant::Pulsed: {
        const LMGModel m = make_model(chi, gamma, n);
        const PulseDesign d = design(m, pulse_axis, options.branch);
        Propagator prop;
        const double horizon = options.horizon.value_or(
            kHorizonMargin * effective_optimal_time(m, d, options, prop) / time_unit(m));
        results[i] = pulsed_trace(m, d, horizon, options, prop);
        break;
      }
    }
  });

  ExperimentResult r;
  r.experiment = "scaling";
  Table t{"scaling", {"n_spins", "variant", "xi2_min", "xi2_min_db", "t_min", "tau_min"}, {}};
  for (std::size_t i = 0; i < jobs; ++i) {
    const int n = n_grid[i / variants.size()];
    const auto& s = results[i];
    t.add_row({std::int64_t{n}, std::string(to_string(variants[i % variants.size()])),
               s.xi2_min, to_db(s.xi2_min), s.t_min, s.t_min * chi * n});
  }
  Table slopes{"slopes", {"variant", "slope", "intercept"}, {}};
  for (std::size_t v = 0; v < variants.size(); ++v) {
    std::vector<double> ns, xs;
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
      ns.push_back(n_grid[k]);
      xs.push_back(results[k * variants.size() + v].xi2_min);
    }
    const auto [slope, intercept] = log_log_fit(ns, xs);
    slopes.add_row({std::string(to_string(variants[v])), slope, intercept});
  }
  r.tables = {std::move(t), std::move(slopes)};
  r.metadata["gamma"] = gamma;
  r.metadata["pulse_axis"] = std::string(to_string(pulse_axis));
  return r;
}

// ---------------------------------------------------------------------------
// Noise

std::string_view to_string(NoiseChannel c) {
  switch (c) {
    case NoiseChannel::PulseSeparation: return "pulse_separation";
    case NoiseChannel::PulseArea: return "pulse_area";
    case NoiseChannel::Gamma: return "gamma";
    case NoiseChannel::Chi: return "chi";
    case NoiseChannel::AtomNumber: return "atom_number";
    case NoiseChannel::PulsePhase: return "pulse_phase";
  }
  return "?";
}

std::string_view to_string(NoiseScope s) {
  switch (s) {
    case NoiseScope::PerRun: return "per_run";
    case NoiseScope::PerPulse: return "per_pulse";
    case NoiseScope::PerSegment: return "per_segment";
  }
  return "?";
}

NoiseChannel parse_noise_channel(std::string_view name) {
  for (auto c : {NoiseChannel::PulseSeparation, NoiseChannel::PulseArea, NoiseChannel::Gamma,
                 NoiseChannel::Chi, NoiseChannel::AtomNumber, NoiseChannel::PulsePhase}) {
    if (to_string(c) == name) return c;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown noise channel '" + std::string(name) + "'");
}

NoiseScope parse_noise_scope(std::string_view name) {
  for (auto s : {NoiseScope::PerRun, NoiseScope::PerPulse, NoiseScope::PerSegment}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown noise scope '" + std::string(name) + "'");
}

NoiseScope default_scope(NoiseChannel c) {
  switch (c) {
    case NoiseChannel::PulseSeparation: return NoiseScope::PerSegment;
    case NoiseChannel::PulseArea:
    case NoiseChannel::PulsePhase: return NoiseScope::PerPulse;
    case NoiseChannel::Gamma:
    case NoiseChannel::Chi:
    case NoiseChannel::AtomNumber: return NoiseScope::PerRun;
  }
  return NoiseScope::PerRun;
}

void validate(const NoiseSpec& spec) {
  if (!(spec.relative_sigma >= 0.0) || !std::isfinite(spec.relative_sigma)) {
    throw Error(ErrorKind::InvalidArgument, "relative_sigma must be finite and >= 0");
  }
  bool ok = spec.scope == NoiseScope::PerRun;
  switch (spec.channel) {
    case NoiseChannel::PulseSeparation:
    case NoiseChannel::Gamma:
    case NoiseChannel::Chi: ok = ok || spec.scope == NoiseScope::PerSegment; break;
    case NoiseChannel::PulseArea:
    case NoiseChannel::PulsePhase: ok = ok || spec.scope == NoiseScope::PerPulse; break;
    case NoiseChannel::AtomNumber: break;
  }
  if (!ok) {
    throw Error(ErrorKind::InvalidArgument, "scope " + std::string(to_string(spec.scope)) +
                                                " is not valid for channel " +
                                                std::string(to_string(spec.channel)));
  }
}

std::uint64_t stream_seed(std::uint64_t root, std::uint64_t run, std::uint64_t channel) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(root) ^ run) ^ (channel + 0x632BE59BD9B4E019ULL));
}

namespace {

struct RunOutcome {
  std::vector<double> xi2;  // per nominal cycle boundary
  int n_spins = 0;
  double gamma = 0.0;
  double chi = 0.0;
  int clamped = 0;
};

struct ChannelDraw {
  const NoiseSpec* spec = nullptr;
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};

  double next() { return normal(rng); }
};

Eigen::Vector3d tilted(Axis axis, double tilt, double azimuth) {
  const Eigen::Vector3d n = unit_vector(axis);
  const Eigen::Vector3d u = unit_vector(static_cast<Axis>((static_cast<int>(axis) + 1) % 3));
  const Eigen::Vector3d v = n.cross(u);
  return std::cos(tilt) * n + std::sin(tilt) * (std::cos(azimuth) * u + std::sin(azimuth) * v);
}

RunOutcome noisy_run(const LMGModel& model, const PulseDesign& d, const PulseSchedule& nominal,
                     const std::vector<NoiseSpec>& noise, std::uint64_t seed, int run,
                     Propagator& prop) {
  std::vector<ChannelDraw> draws;
  draws.reserve(noise.size());
  for (const auto& spec : noise) {
    ChannelDraw cd;
    cd.spec = &spec;
    cd.rng.seed(stream_seed(seed, static_cast<std::uint64_t>(run),
                            static_cast<std::uint64_t>(spec.channel)));
    draws.push_back(std::move(cd));
  }
  auto find = [&](NoiseChannel c) -> ChannelDraw* {
    for (auto& cd : draws)
      if (cd.spec->channel == c) return &cd;
    return nullptr;
  };

  RunOutcome out;
  double gamma = model.gamma;
  double chi = model.chi;
  int n_spins = model.n_spins;
  // Per-run draws happen first, one value per channel.
  double area_factor = 1.0;
  double separation_factor = 1.0;
  Eigen::Vector3d run_axis = unit_vector(d.axis);
  for (auto& cd : draws) {
    if (cd.spec->scope != NoiseScope::PerRun) continue;
    const double s = cd.spec->relative_sigma;
    switch (cd.spec->channel) {
      case NoiseChannel::Gamma: gamma *= 1.0 + s * cd.next(); break;
      case NoiseChannel::Chi: chi *= 1.0 + s * cd.next(); break;
      case NoiseChannel::AtomNumber:
        n_spins = std::max(1, static_cast<int>(std::lround(n_spins * (1.0 + s * cd.next()))));
        break;
      case NoiseChannel::PulseArea: area_factor = 1.0 + s * cd.next(); break;
      case NoiseChannel::PulseSeparation: separation_factor = 1.0 + s * cd.next(); break;
      case NoiseChannel::PulsePhase: {
        const double tilt = s * 0.5 * pi * cd.next();
        const double az = 2.0 * pi * std::uniform_real_distribution<double>(0.0, 1.0)(cd.rng);
        run_axis = tilted(d.axis, tilt, az);
        break;
      }
    }
  }
  out.n_spins = n_spins;
  out.gamma = gamma;
  out.chi = chi;

  const DickeSpace space(n_spins);
  const SpinOperator h = quadratic_form(space, chi, chi * gamma, 0.0);
  ChannelDraw* area = find(NoiseChannel::PulseArea);
  ChannelDraw* phase = find(NoiseChannel::PulsePhase);
  ChannelDraw* separation = find(NoiseChannel::PulseSeparation);
  ChannelDraw* seg_gamma = find(NoiseChannel::Gamma);
  ChannelDraw* seg_chi = find(NoiseChannel::Chi);
  auto per = [](ChannelDraw* cd, NoiseScope scope) {
    return cd && cd->spec->scope == scope ? cd : nullptr;
  };
  area = per(area, NoiseScope::PerPulse);
  phase = per(phase, NoiseScope::PerPulse);
  separation = per(separation, NoiseScope::PerSegment);
  seg_gamma = per(seg_gamma, NoiseScope::PerSegment);
  seg_chi = per(seg_chi, NoiseScope::PerSegment);

  PulseSchedule sched = nominal;
  for (auto& segment : sched.segments) {
    if (auto* p = std::get_if<PulseSegment>(&segment)) {
      double factor = area_factor;
      if (area) factor = 1.0 + area->spec->relative_sigma * area->next();
      p->angle *= factor;
      p->axis = run_axis;
      if (phase) {
        const double tilt = phase->spec->relative_sigma * 0.5 * pi * phase->next();
        const double az =
            2.0 * pi * std::uniform_real_distribution<double>(0.0, 1.0)(phase->rng);
        p->axis = tilted(d.axis, tilt, az);
      }
    } else {
      auto& f = std::get<FreeSegment>(segment);
      double factor = separation_factor;
      if (separation) factor = 1.0 + separation->spec->relative_sigma * separation->next();
      f.duration *= factor;
      if (f.duration < 0.0) {
        f.duration = 0.0;
        ++out.clamped;
      }
      if (seg_gamma || seg_chi) {
        const double g =
            seg_gamma ? gamma * (1.0 + seg_gamma->spec->relative_sigma * seg_gamma->next()) : gamma;
        const double c =
            seg_chi ? chi * (1.0 + seg_chi->spec->relative_sigma * seg_chi->next()) : chi;
        f.hamiltonian = std::make_shared<const SpinOperator>(quadratic_form(space, c, c * g, 0.0));
      }
    }
  }

  const RotationKit kit(space);
  out.xi2 = run_and_sample(coherent_state(space, d.initial_angles()), sched, h, kit, prop);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ExperimentResult noise_monte_carlo(const LMGModel& model, Axis axis,
                                   const std::vector<NoiseSpec>& noise, int n_runs,
                                   std::uint64_t seed, const HarnessOptions& options) {
  if (n_runs < 1) throw Error(ErrorKind::InvalidArgument, "n_runs must be >= 1");
  for (const auto& spec : noise) validate(spec);
  for (std::size_t i = 0; i < noise.size(); ++i)
    for (std::size_t k = i + 1; k < noise.size(); ++k)
      if (noise[i].channel == noise[k].channel) {
        throw Error(ErrorKind::InvalidArgument,
                    "noise channel " + std::string(to_string(noise[i].channel)) + " listed twice");
      }

  const PulseDesign d = design(model, axis, options.branch);
  Propagator prop;
  const double horizon = options.horizon.value_or(
      kHorizonMargin * effective_optimal_time(model, d, options, prop) / time_unit(model));
  const PulseSchedule nominal = build_schedule(model, d, horizon, options);

  const RunOutcome clean = noisy_run(model, d, nominal, {}, seed, -1, prop);
  std::vector<RunOutcome> runs(n_runs);
  detail::parallel_for(static_cast<std::size_t>(n_runs), options.workers, [&](std::size_t i) {
    runs[i] = noisy_run(model, d, nominal, noise, seed, static_cast<int>(i), prop);
  });

  const double tc = nominal.cycle_time();
  const double unit = time_unit(model);
  const int samples = nominal.cycle_count + 1;

  ExperimentResult r;
  r.experiment = "noise";
  Table traces{"traces", {"t", "tau", "noiseless"}, {}};
  for (int i = 0; i < n_runs; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03d", i);
    traces.columns.emplace_back(name);
  }
  Table envelope{"envelope", {"t", "tau", "noiseless", "median", "lower", "upper"}, {}};
  for (int k = 0; k < samples; ++k) {
    std::vector<Cell> row{k * tc, k * tc / unit, clean.xi2[k]};
    std::vector<double> finite;
    for (const auto& run : runs) {
      row.emplace_back(run.xi2[k]);
      if (!std::isnan(run.xi2[k])) finite.push_back(run.xi2[k]);
    }
    traces.add_row(std::move(row));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    envelope.add_row({k * tc, k * tc / unit, clean.xi2[k], finite.empty() ? nan : median(finite),
                      finite.empty() ? nan : *std::min_element(finite.begin(), finite.end()),
                      finite.empty() ? nan : *std::max_element(finite.begin(), finite.end())});
  }

  Table per_run{"runs",
                {"run", "n_spins", "gamma", "chi", "xi2_min", "xi2_min_db", "t_min", "tau_min",
                 "clamped_segments"},
                {}};
  std::vector<double> min_db;
  int clamped_total = 0;
  for (int i = 0; i < n_runs; ++i) {
    const auto& run = runs[i];
    const auto [idx, bracketed] = locate_minimum(run.xi2);
    const double xi2 = run.xi2[idx];
    min_db.push_back(to_db(xi2));
    clamped_total += run.clamped;
    per_run.add_row({std::int64_t{i}, std::int64_t{run.n_spins}, run.gamma, run.chi, xi2,
                     to_db(xi2), idx * tc, idx * tc / unit, std::int64_t{run.clamped}});
  }

  const auto [clean_idx, clean_bracketed] = locate_minimum(clean.xi2);
  const double clean_db = to_db(clean.xi2[clean_idx]);
  const double median_db = median(min_db);
  Table summary{"summary",
                {"noiseless_xi2_min", "noiseless_db", "noiseless_t_min", "median_xi2_min_db",
                 "relative_db_deviation", "n_runs"},
                {}};
  summary.add_row({clean.xi2[clean_idx], clean_db, clean_idx * tc, median_db,
                   std::abs(median_db - clean_db) / std::abs(clean_db), std::int64_t{n_runs}});

  r.tables = {std::move(traces), std::move(envelope), std::move(per_run), std::move(summary)};
  r.xi2_min = clean.xi2[clean_idx];
  r.t_min = clean_idx * tc;
  r.metadata["model"] = model_json(model);
  r.metadata["design"] = design_json(d);
  r.metadata["horizon_tau"] = horizon;
  r.metadata["cycle_time"] = tc;
  r.metadata["clamped_segments"] = clamped_total;
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& spec : noise) {
    channels.push_back({{"channel", std::string(to_string(spec.channel))},
                        {"relative_sigma", spec.relative_sigma},
                        {"scope", std::string(to_string(spec.scope))}});
  }
  r.metadata["noise"] = channels;
  r.metadata["noise_model"] = {
      {"pulse_separation", "each free-evolution duration scaled by (1 + sigma g); negative "
                           "durations clamped to zero"},
      {"pulse_area", "rotation angle scaled by (1 + sigma g)"},
      {"pulse_phase", "rotation axis tilted away from the nominal axis by sigma (pi/2) g "
                      "towards a uniformly random direction in the perpendicular plane"},
      {"gamma", "calibration uncertainty: gamma scaled by (1 + sigma g)"},
      {"chi", "calibration uncertainty: chi scaled by (1 + sigma g)"},
      {"atom_number", "N scaled by (1 + sigma g), rounded to the nearest integer >= 1"},
      {"time_axis", "nominal cycle-boundary times"},
      {"rng", "mt19937_64 per (seed, run, channel) stream, standard normal g"}};
  return r;
}

}  // namespace spinsq
