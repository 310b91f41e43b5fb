#include "scl/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace scl {

// ---------------------------------------------------------------------------
// Deterministic reductions
// ---------------------------------------------------------------------------

double pairwise_sum(const double* data, size_t count) {
    if (count <= 16) {
        double s = 0.0;
        for (size_t i = 0; i < count; ++i) s += data[i];
        return s;
    }
    const size_t half = count / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

MCEstimate summarize(const std::vector<double>& samples) {
    MCEstimate est;
    est.n = samples.size();
    if (samples.empty()) return est;
    est.mean = pairwise_sum(samples) / static_cast<double>(samples.size());
    if (samples.size() < 2) return est;
    std::vector<double> sq(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        const double d = samples[i] - est.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(samples.size() - 1);
    est.se = std::sqrt(var / static_cast<double>(samples.size()));
    return est;
}

namespace {

int step_count(double s, double horizon, double dt) {
    const double span = horizon - s;
    if (!(dt > 0.0) || !(span > 0.0))
        throw Error("simulate: need dt > 0 and a start before maturity");
    const int k = static_cast<int>(std::lround(span / dt));
    if (k < 1 || std::fabs(k * dt - span) > 1e-9 * std::max(1.0, horizon))
        throw Error("simulate: dt must divide the time to maturity");
    return k;
}

} // namespace

// ---------------------------------------------------------------------------
// Uncontrolled diffusion
// ---------------------------------------------------------------------------

Path simulate_uncontrolled(const ProblemSpec& spec, double s, double x, double dt,
                           uint64_t seed, uint64_t path_index) {
    if (x < spec.band_lo || x > spec.band_hi)
        throw Error("simulate_uncontrolled: start outside the band");
    const int steps = step_count(s, spec.horizon, dt);
    const double sqdt = std::sqrt(dt);
    PathRng rng(seed, path_index);

    Path path;
    path.times.reserve(steps + 1);
    path.states.reserve(steps + 1);
    path.times.push_back(s);
    path.states.push_back(x);

    double y = x;
    for (int k = 0; k < steps; ++k) {
        const double t0 = s + k * dt;
        const double t1 = s + (k + 1) * dt;
        path.dividend += std::exp(spec.c * t0) * spec.h(t0, y) * dt;
        y += spec.drift_aux(y) * dt + spec.sigma(0.0, y) * sqdt * rng.gaussian(k);
        path.times.push_back(t1);
        path.states.push_back(y);
        if (y <= spec.band_lo || y >= spec.band_hi) {
            path.band_exit = true;
            path.stop_time = t1;
            path.stop_kind = y <= spec.band_lo ? StopKind::HitLower : StopKind::HitUpper;
            return path;
        }
    }
    path.stop_time = spec.horizon;
    path.stop_kind = StopKind::Maturity;
    return path;
}

// ---------------------------------------------------------------------------
// Game estimator
// ---------------------------------------------------------------------------

GameEstimate saddle_game_estimate(const ProblemSpec& spec, const FreeBoundaries& fb,
                                  const std::function<double(double)>& terminal_payoff,
                                  double s, double x, int n_paths, double dt, uint64_t seed,
                                  const GameEstimatorOptions& opts) {
    if (n_paths <= 0) throw Error("saddle_game_estimate: need at least one path");
    GameEstimate out;

    if (opts.p2_stops_immediately) {
        // the maximizer quits at the start: payoff -f1 there, no dividend
        out.value = MCEstimate{-spec.f1(s, x), 0.0, static_cast<size_t>(n_paths)};
        out.stopped_lower = static_cast<size_t>(n_paths);
        return out;
    }

    auto lower_stop = [&](double t) { return fb.a_at(t) + opts.shift_lower; };
    auto upper_stop = [&](double t) { return fb.b_at(t) + opts.shift_upper; };

    if (x <= lower_stop(s)) {
        out.value = MCEstimate{-spec.f1(s, x), 0.0, static_cast<size_t>(n_paths)};
        out.stopped_lower = static_cast<size_t>(n_paths);
        return out;
    }
    if (x >= upper_stop(s)) {
        out.value = MCEstimate{spec.f2(s, x), 0.0, static_cast<size_t>(n_paths)};
        out.stopped_upper = static_cast<size_t>(n_paths);
        return out;
    }

    const int steps = step_count(s, spec.horizon, dt);
    const double sqdt = std::sqrt(dt);
    std::vector<double> payoffs(static_cast<size_t>(n_paths));

    for (int p = 0; p < n_paths; ++p) {
        PathRng rng(seed, static_cast<uint64_t>(p));
        double y = x;
        double dividend = 0.0;
        double payoff = 0.0;
        bool stopped = false;
        for (int k = 0; k < steps && !stopped; ++k) {
            const double t0 = s + k * dt;
            const double t1 = s + (k + 1) * dt;
            dividend += std::exp(spec.c * t0) * spec.h(t0, y) * dt;
            y += spec.drift_aux(y) * dt +
                 spec.sigma(0.0, y) * sqdt * rng.gaussian(static_cast<uint64_t>(k));
            // band exits count as contact: the edge bands are stopping regions
            if (y <= lower_stop(t1) || y <= spec.band_lo) {
                payoff = dividend - spec.f1(t1, y);
                ++out.stopped_lower;
                stopped = true;
            } else if (y >= upper_stop(t1) || y >= spec.band_hi) {
                payoff = dividend + spec.f2(t1, y);
                ++out.stopped_upper;
                stopped = true;
            }
        }
        if (!stopped) {
            payoff = dividend + terminal_payoff(y);
            ++out.reached_maturity;
        }
        payoffs[static_cast<size_t>(p)] = payoff;
    }
    out.value = summarize(payoffs);
    return out;
}

// ---------------------------------------------------------------------------
// Reflection bands
// ---------------------------------------------------------------------------

ReflectionBands ReflectionBands::from(const FreeBoundaries& fb) {
    return ReflectionBands{fb.t, fb.a_tilde, fb.b_tilde};
}

ReflectionBands ReflectionBands::shifted(double delta) const {
    ReflectionBands out = *this;
    for (auto& v : out.lower) v += delta;
    for (auto& v : out.upper) v += delta;
    return out;
}

ReflectionBands ReflectionBands::widened(double delta) const {
    ReflectionBands out = *this;
    for (auto& v : out.lower) v -= delta;
    for (auto& v : out.upper) v += delta;
    return out;
}

ReflectionBands ReflectionBands::narrowed(double delta) const {
    ReflectionBands out = *this;
    for (size_t i = 0; i < out.lower.size(); ++i) {
        out.lower[i] += delta;
        out.upper[i] -= delta;
        if (!(out.lower[i] < out.upper[i]))
            throw Error("ReflectionBands::narrowed: bands cross at t=" + format17(t[i]));
    }
    return out;
}

ReflectionBands ReflectionBands::frozen_at_terminal() const {
    ReflectionBands out = *this;
    std::fill(out.lower.begin(), out.lower.end(), lower.back());
    std::fill(out.upper.begin(), out.upper.end(), upper.back());
    return out;
}

// ---------------------------------------------------------------------------
// Reflected paths: one stepping core feeding either a recorder or a cost
// accumulator, so stored-path evaluation and the streaming estimator are
// arithmetically identical.
// ---------------------------------------------------------------------------

namespace {

// trapezoid of e^{-ct} f(t,.) over [lo_x, hi_x] with panels tied to the grid cell
double price_integral(const Expr& f, double c, double t, double lo_x, double hi_x,
                      double cell) {
    if (hi_x <= lo_x) return 0.0;
    const int panels = std::max(1, static_cast<int>(std::ceil((hi_x - lo_x) / cell)));
    const double h = (hi_x - lo_x) / panels;
    double sum = 0.5 * (f(t, lo_x) + f(t, hi_x));
    for (int i = 1; i < panels; ++i) sum += f(t, lo_x + i * h);
    return std::exp(-c * t) * sum * h;
}

struct CostAccumulator {
    const ProblemSpec& spec;
    const HoldingCost& hc;
    const TransformedTerminal& terminal;
    double dt;
    double cell;
    CostBreakdown cost{};
    double prev_h = 0.0;
    bool terminal_jumped = false;

    CostAccumulator(const ProblemSpec& spec, const HoldingCost& hc,
                    const TransformedTerminal& terminal, double dt)
        : spec(spec), hc(hc), terminal(terminal), dt(dt), cell(hc.grid.dy()) {}

    void start(double s, double x_post_jump, const JumpRecord* jump) {
        if (jump) {
            if (jump->side > 0)
                cost.jump += price_integral(spec.f1, spec.c, s, x_post_jump - jump->delta,
                                            x_post_jump, cell);
            else
                cost.jump += price_integral(spec.f2, spec.c, s, x_post_jump,
                                            x_post_jump + jump->delta, cell);
        }
        prev_h = hc.interp(s, x_post_jump);
    }

    void step(double t1, double x_post, double da1, double da2) {
        const double h1 = hc.interp(t1, x_post);
        cost.holding += 0.5 * (prev_h + h1) * dt;
        prev_h = h1;
        if (da1 > 0.0) cost.control_lower += std::exp(-spec.c * t1) * spec.f1(t1, x_post) * da1;
        if (da2 > 0.0) cost.control_upper += std::exp(-spec.c * t1) * spec.f2(t1, x_post) * da2;
    }

    void finish(double T, double x_pre, double x_post, int jump_side, double jump_delta) {
        const double h1 = hc.interp(T, x_pre);
        cost.holding += 0.5 * (prev_h + h1) * dt;
        if (jump_side > 0)
            cost.jump += price_integral(spec.f1, spec.c, T, x_pre, x_pre + jump_delta, cell);
        else if (jump_side < 0)
            cost.jump += price_integral(spec.f2, spec.c, T, x_pre - jump_delta, x_pre, cell);
        terminal_jumped = jump_side != 0;
        cost.terminal = terminal.G_at(x_post);
    }
};

struct PathRecorder {
    ControlledPath path;
    double a1 = 0.0, a2 = 0.0;

    void start(double s, double x_post, const JumpRecord* jump) {
        if (jump) {
            path.jumps.push_back(*jump);
            (jump->side > 0 ? a1 : a2) += jump->delta;
        }
        path.times.push_back(s);
        path.states.push_back(x_post);
        path.a1.push_back(a1);
        path.a2.push_back(a2);
    }

    void step(double t1, double x_post, double da1, double da2) {
        a1 += da1;
        a2 += da2;
        path.times.push_back(t1);
        path.states.push_back(x_post);
        path.a1.push_back(a1);
        path.a2.push_back(a2);
    }

    void finish(double T, double /*x_pre*/, double x_post, int jump_side, double jump_delta) {
        path.terminal_jump = jump_delta;
        path.terminal_jump_side = jump_side;
        a1 += jump_side > 0 ? jump_delta : 0.0;
        a2 += jump_side < 0 ? jump_delta : 0.0;
        path.times.push_back(T);
        path.states.push_back(x_post);
        path.a1.push_back(a1);
        path.a2.push_back(a2);
    }
};

// terminal_pre receives X_{T-}, the raw final Euler state before the
// maturity action
template <typename Sink>
void run_reflected(const ProblemSpec& spec, const ReflectionBands& bands, double s, double x,
                   double dt, uint64_t seed, uint64_t path_index, TerminalPolicy policy,
                   double clamp_lo, double clamp_hi, Sink& sink, double* terminal_pre) {
    const int steps = step_count(s, spec.horizon, dt);
    const double sqdt = std::sqrt(dt);
    PathRng rng(seed, path_index);

    double xcur = x;
    JumpRecord initial;
    const JumpRecord* initial_ptr = nullptr;
    const double lb0 = bands.lower_at(s);
    const double ub0 = bands.upper_at(s);
    if (xcur < lb0) {
        initial = {s, +1, lb0 - xcur};
        xcur = lb0;
        initial_ptr = &initial;
    } else if (xcur > ub0) {
        initial = {s, -1, xcur - ub0};
        xcur = ub0;
        initial_ptr = &initial;
    }
    sink.start(s, xcur, initial_ptr);

    for (int k = 0; k < steps; ++k) {
        const double t1 = s + (k + 1) * dt;
        xcur += spec.mu(xcur) * dt +
                spec.sigma(0.0, xcur) * sqdt * rng.gaussian(static_cast<uint64_t>(k));
        if (k + 1 < steps) {
            double da1 = 0.0, da2 = 0.0;
            const double lb = bands.lower_at(t1);
            const double ub = bands.upper_at(t1);
            if (xcur < lb) {
                da1 = lb - xcur;
                xcur = lb;
            } else if (xcur > ub) {
                da2 = xcur - ub;
                xcur = ub;
            }
            sink.step(t1, xcur, da1, da2);
        } else {
            // arrival at maturity: the terminal policy owns the last action
            const double pre = xcur;
            if (terminal_pre) *terminal_pre = pre;
            int side = 0;
            double delta = 0.0;
            double post = pre;
            if (policy == TerminalPolicy::ClampAB) {
                if (pre < clamp_lo) {
                    side = +1;
                    delta = clamp_lo - pre;
                    post = clamp_lo;
                } else if (pre > clamp_hi) {
                    side = -1;
                    delta = pre - clamp_hi;
                    post = clamp_hi;
                }
            }
            sink.finish(t1, pre, post, side, delta);
        }
    }
}

} // namespace

ControlledPath simulate_reflected(const ProblemSpec& spec, const ReflectionBands& bands,
                                  double s, double x, double dt, uint64_t seed,
                                  uint64_t path_index, TerminalPolicy policy, double clamp_lo,
                                  double clamp_hi) {
    PathRecorder recorder;
    double terminal_pre = 0.0;
    run_reflected(spec, bands, s, x, dt, seed, path_index, policy, clamp_lo, clamp_hi,
                  recorder, &terminal_pre);
    // stash X_{T-} for cost replay: the stored terminal state is post-action
    recorder.path.terminal_pre = terminal_pre;
    return std::move(recorder.path);
}

CostBreakdown evaluate_cost(ControlledPath& path, const ProblemSpec& spec,
                            const HoldingCost& hc, const TransformedTerminal& terminal) {
    if (path.times.size() < 2) throw Error("evaluate_cost: empty path");
    const double dt = path.times[1] - path.times[0];
    CostAccumulator acc(spec, hc, terminal, dt);
    const JumpRecord* initial = nullptr;
    if (!path.jumps.empty() && path.jumps.front().time == path.times.front())
        initial = &path.jumps.front();
    acc.start(path.times.front(), path.states.front(), initial);
    const size_t last = path.times.size() - 1;
    for (size_t k = 1; k < last; ++k) {
        acc.step(path.times[k], path.states[k], path.a1[k] - path.a1[k - 1],
                 path.a2[k] - path.a2[k - 1]);
    }
    acc.finish(path.times[last], path.terminal_pre, path.states[last],
               path.terminal_jump_side, path.terminal_jump);
    path.cost = acc.cost;
    return acc.cost;
}

MCEstimate evaluate_cost(std::vector<ControlledPath>& paths, const ProblemSpec& spec,
                         const HoldingCost& hc, const TransformedTerminal& terminal) {
    if (paths.empty()) throw Error("evaluate_cost: no paths");
    std::vector<double> totals(paths.size());
    for (size_t i = 0; i < paths.size(); ++i)
        totals[i] = evaluate_cost(paths[i], spec, hc, terminal).total();
    return summarize(totals);
}

MCEstimate estimate_policy_cost(const ProblemSpec& spec, const ReflectionBands& bands,
                                const HoldingCost& hc, const TransformedTerminal& terminal,
                                double s, double x, int n_paths, double dt, uint64_t seed,
                                TerminalPolicy policy, double clamp_lo, double clamp_hi,
                                std::vector<double>* per_path_costs,
                                size_t* terminal_jump_count) {
    if (n_paths <= 0) throw Error("estimate_policy_cost: need at least one path");
    std::vector<double> totals(static_cast<size_t>(n_paths));
    size_t jumps = 0;
    for (int p = 0; p < n_paths; ++p) {
        CostAccumulator acc(spec, hc, terminal, dt);
        run_reflected(spec, bands, s, x, dt, seed, static_cast<uint64_t>(p), policy, clamp_lo,
                      clamp_hi, acc, nullptr);
        totals[static_cast<size_t>(p)] = acc.cost.total();
        jumps += acc.terminal_jumped ? 1 : 0;
    }
    if (per_path_costs) *per_path_costs = totals;
    if (terminal_jump_count) *terminal_jump_count = jumps;
    return summarize(totals);
}

// ---------------------------------------------------------------------------
// Verification battery
// ---------------------------------------------------------------------------

const VerificationRow* VerificationReport::find(const std::string& name) const {
    for (const auto& row : rows)
        if (row.name == name) return &row;
    return nullptr;
}

std::string VerificationReport::text() const {
    std::ostringstream os;
    os << "seed: " << seed << "\n";
    os << "n_paths: " << n_paths << "\n";
    os << "dt: " << format17(dt) << "\n";
    os << "scheme_bias: " << format17(bias) << "\n";
    for (const auto& row : rows) {
        const char* status = row.status == CheckStatus::Pass          ? "PASS"
                             : row.status == CheckStatus::Fail        ? "FAIL"
                                                                      : "INCONCLUSIVE";
        os << "check " << row.name << ": status=" << status
           << " estimate=" << format17(row.estimate) << " se=" << format17(row.se)
           << " reference=" << format17(row.reference) << " budget=" << format17(row.budget)
           << " n=" << row.n;
        if (!row.note.empty()) os << " note=" << row.note;
        os << "\n";
    }
    os << "overall: " << (passed ? "PASS" : "FAIL") << "\n";
    return os.str();
}

VerificationReport verify_optimality(const ProblemSpec& spec, const ValueSurface& surface,
                                     const WSurface& ws, const HoldingCost& hc,
                                     const FreeBoundaries& fb,
                                     const TransformedTerminal& terminal,
                                     const VerifyConfig& config) {
    VerificationReport report;
    report.seed = config.seed;
    report.n_paths = config.n_paths;
    report.dt = config.dt;
    report.bias = scheme_bias(config.dt, surface.grid.dy());
    const double s = config.s, x = config.x;

    auto push = [&](VerificationRow row) { report.rows.push_back(std::move(row)); };
    auto status_vs_budget = [&](double est, double se, double ref, double slack) {
        if (3.0 * se > config.max_ci_halfwidth) return CheckStatus::Inconclusive;
        return std::fabs(est - ref) <= slack ? CheckStatus::Pass : CheckStatus::Fail;
    };

    // 1. game estimator against the PDE value
    {
        auto est = saddle_game_estimate(
            spec, fb, [&](double y) { return terminal.g_tilde_at(y); }, s, x, config.n_paths,
            config.dt, config.seed);
        VerificationRow row;
        row.name = "game-mc-vs-value";
        row.estimate = est.value.mean;
        row.se = est.value.se;
        row.reference = surface.interp(s, x);
        row.budget = 3.0 * est.value.se + report.bias;
        row.n = est.value.n;
        row.status = status_vs_budget(row.estimate, row.se, row.reference, row.budget);
        push(row);
    }

    // 2. optimal policy cost against W
    const ReflectionBands base_bands = ReflectionBands::from(fb);
    const TerminalPolicy base_policy =
        config.general_terminal ? TerminalPolicy::ClampAB : TerminalPolicy::None;
    std::vector<double> base_costs;
    MCEstimate base = estimate_policy_cost(spec, base_bands, hc, terminal, s, x,
                                           config.n_paths, config.dt, config.seed, base_policy,
                                           terminal.A, terminal.B, &base_costs, nullptr);
    {
        VerificationRow row;
        row.name = "control-mc-vs-w";
        row.estimate = base.mean;
        row.se = base.se;
        row.reference = ws.interp(s, x);
        row.budget = 3.0 * base.se + report.bias;
        row.n = base.n;
        row.status = status_vs_budget(row.estimate, row.se, row.reference, row.budget);
        push(row);
    }

    // 3. perturbed policies must not beat the optimal one
    const double delta = config.perturbation;
    double min_gap = 1e300;
    for (size_t i = 0; i < fb.a_tilde.size(); ++i)
        min_gap = std::min(min_gap, fb.b_tilde[i] - fb.a_tilde[i]);
    const double narrow_delta = std::min(delta, 0.45 * min_gap);
    const std::pair<std::string, ReflectionBands> policies[] = {
        {"policy-shift-up", base_bands.shifted(delta)},
        {"policy-shift-down", base_bands.shifted(-delta)},
        {"policy-widened", base_bands.widened(delta)},
        {"policy-narrowed", base_bands.narrowed(narrow_delta)},
        {"policy-frozen", base_bands.frozen_at_terminal()},
    };
    for (const auto& [name, bands] : policies) {
        MCEstimate est = estimate_policy_cost(spec, bands, hc, terminal, s, x, config.n_paths,
                                              config.dt, config.seed, base_policy, terminal.A,
                                              terminal.B, nullptr, nullptr);
        VerificationRow row;
        row.name = name;
        row.estimate = est.mean;
        row.se = est.se;
        row.reference = base.mean;
        row.budget = 2.0 * est.se;
        row.n = est.n;
        if (3.0 * est.se > config.max_ci_halfwidth)
            row.status = CheckStatus::Inconclusive;
        else
            row.status = est.mean >= base.mean - 2.0 * est.se ? CheckStatus::Pass
                                                              : CheckStatus::Fail;
        push(row);
    }

    // 4. with the general terminal: clamping into [A,B] at maturity must not cost more
    if (config.general_terminal) {
        std::vector<double> none_costs;
        size_t jump_count = 0;
        std::vector<double> clamp_costs;
        estimate_policy_cost(spec, base_bands, hc, terminal, s, x, config.n_paths, config.dt,
                             config.seed, TerminalPolicy::None, terminal.A, terminal.B,
                             &none_costs, nullptr);
        estimate_policy_cost(spec, base_bands, hc, terminal, s, x, config.n_paths, config.dt,
                             config.seed, TerminalPolicy::ClampAB, terminal.A, terminal.B,
                             &clamp_costs, &jump_count);
        std::vector<double> diff(none_costs.size());
        for (size_t i = 0; i < diff.size(); ++i) diff[i] = none_costs[i] - clamp_costs[i];
        MCEstimate d = summarize(diff);
        VerificationRow row;
        row.name = "terminal-clamp-benefit";
        row.estimate = d.mean;
        row.se = d.se;
        row.reference = 0.0;
        row.budget = 2.0 * d.se;
        row.n = d.n;
        row.note = "terminal_jump_frequency=" +
                   format17(static_cast<double>(jump_count) / static_cast<double>(d.n));
        row.status = d.mean >= -2.0 * d.se ? CheckStatus::Pass : CheckStatus::Fail;
        push(row);
    }

    report.passed = std::all_of(report.rows.begin(), report.rows.end(),
                                [](const VerificationRow& r) {
                                    return r.status != CheckStatus::Fail;
                                });
    return report;
}

} // namespace scl
