#include "fungen/engine.hpp"

#include <algorithm>
#include <cmath>

namespace fungen {

namespace {

/// Member-restricted view of one trading day.
struct DayView {
    std::vector<std::size_t> members;
    std::vector<double> mu_begin;
    std::vector<double> mu_end;
    std::vector<double> lambda;
    std::vector<double> lambda_prev;
    WeightVector full_begin;
    DayEnd end;
};

std::vector<double> gather_lambda(const LambdaPath& lam, std::size_t l,
                                  const std::vector<std::size_t>& members) {
    const auto row = lam.at(l);
    if (row.size() == 1) return {row[0]};
    std::vector<double> out(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) out[k] = row[members[k]];
    return out;
}

DayView view_day(const MarketPath& path, const LambdaPath& lam, std::size_t l) {
    DayView v;
    v.members = path.member_indices(l);
    v.full_begin = begin_weights(path, l);
    v.end = end_of_day(path, l);
    v.mu_begin.resize(v.members.size());
    v.mu_end.resize(v.members.size());
    for (std::size_t k = 0; k < v.members.size(); ++k) {
        v.mu_begin[k] = v.full_begin[v.members[k]];
        v.mu_end[k] = v.end.weights[v.members[k]];
    }
    v.lambda = gather_lambda(lam, l, v.members);
    v.lambda_prev = l == 0 ? v.lambda : gather_lambda(lam, l - 1, v.members);
    return v;
}

void check_grid(const MarketPath& path, const LambdaPath& lam) {
    if (lam.days() != path.days())
        throw ConfigError("lambda path has " + std::to_string(lam.days()) + " days, market has " +
                          std::to_string(path.days()));
}

double dot_increment(std::span<const double> w, std::span<const double> begin,
                     std::span<const double> end) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * (end[i] - begin[i]);
    return s;
}

void check_domain_at(const GenFunction& g, const DayView& v, std::size_t l) {
    try {
        g.check_domain(v.lambda, v.mu_begin);
        g.check_domain(v.lambda, v.mu_end);
    } catch (const DomainError& e) {
        throw DomainError(e.what(), l);
    }
}

}  // namespace

std::string to_string(StrategyMode mode) {
    return mode == StrategyMode::additive ? "additive" : "multiplicative";
}

// ---- normalization ---------------------------------------------------------

double NormalizedGen::shifted_value(std::span<const double> lambda, std::span<const double> x) const {
    return base->value(lambda, x) + offset();
}

double NormalizedGen::value(std::span<const double> lambda, std::span<const double> x) const {
    return shifted_value(lambda, x) / scale();
}

void NormalizedGen::gradient(std::span<const double> lambda, std::span<const double> x,
                             std::span<double> out) const {
    base->gradient(lambda, x, out);
    const double s = scale();
    if (s != 1.0)
        for (double& v : out) v /= s;
}

NormalizedGen normalize(GenFunctionPtr g, std::span<const double> lambda0, const WeightVector& mu0,
                        double c) {
    if (!(c >= 0.0)) throw ConfigError("normalize: c must be >= 0");
    g->check_domain(lambda0, mu0.values());
    NormalizedGen out;
    out.g0 = g->value(lambda0, mu0.values());
    out.c_shift = c;
    if (!std::isfinite(out.g0)) throw DomainError("normalize: G(lambda0, mu0) is not finite");
    if (out.g0 + c < 0.0)
        throw DomainError("normalize: negative initial value G(lambda0, mu0) = " + std::to_string(out.g0));
    out.mode = out.g0 + c > 0.0 ? NormalizationMode::divide : NormalizationMode::shift_plus_one;
    out.base = std::move(g);
    return out;
}

NormalizedGen normalize_at_start(GenFunctionPtr g, const MarketPath& path, const LambdaPath& lam,
                                 double c) {
    check_grid(path, lam);
    check_lambda_compatible(*g, lam, path.asset_count());
    const DayView v = view_day(path, lam, 0);
    return normalize(std::move(g), v.lambda, WeightVector::from_values(v.mu_begin), c);
}

void check_lambda_compatible(const GenFunction& g, const LambdaPath& lam, std::size_t asset_count) {
    const std::size_t want = g.lambda_dim(asset_count);
    const std::size_t have = lam.dim();
    if (have == want) return;
    if (have == 1 && g.broadcasts_scalar_lambda()) return;
    throw ConfigError(g.name() + " expects " + std::to_string(want) + " lambda component(s), got " +
                      std::to_string(have) + " from " + lam.kind);
}

// ---- Γ routes --------------------------------------------------------------

GammaPath gamma_defect(const NormalizedGen& g, const MarketPath& path, const LambdaPath& lam) {
    check_grid(path, lam);
    check_lambda_compatible(*g.base, lam, path.asset_count());
    GammaPath out;
    out.route = GammaRoute::defect;
    out.values.resize(path.days());
    double g_start = 0.0;
    double integral = 0.0;
    std::vector<double> grad;
    for (std::size_t l = 0; l < path.days(); ++l) {
        const DayView v = view_day(path, lam, l);
        check_domain_at(*g.base, v, l);
        if (l == 0) g_start = g.value(v.lambda, v.mu_begin);
        grad.assign(v.members.size(), 0.0);
        g.gradient(v.lambda, v.mu_begin, grad);
        integral += dot_increment(grad, v.mu_begin, v.mu_end);
        out.values[l] = g_start - g.value(v.lambda, v.mu_end) + integral;
    }
    return out;
}

GammaPath gamma_closed(const NormalizedGen& g, const MarketPath& path, const LambdaPath& lam) {
    check_grid(path, lam);
    check_lambda_compatible(*g.base, lam, path.asset_count());
    GammaPath out;
    out.route = GammaRoute::closed_form;
    out.values.resize(path.days());
    double acc = 0.0;
    for (std::size_t l = 0; l < path.days(); ++l) {
        const DayView v = view_day(path, lam, l);
        check_domain_at(*g.base, v, l);
        const auto inc = g.base->gamma_increment(v.lambda_prev, v.lambda, v.mu_begin, v.mu_end);
        if (!inc) throw ConfigError("no closed-form gamma registered for " + g.base->name());
        acc += *inc;
        out.values[l] = acc / g.scale();
    }
    return out;
}

// ---- strategies ------------------------------------------------------------

std::vector<double> theta_additive(const NormalizedGen& g, std::span<const double> lambda,
                                   std::span<const double> mu_begin) {
    g.base->check_domain(lambda, mu_begin);
    std::vector<double> theta(mu_begin.size());
    g.gradient(lambda, mu_begin, theta);
    return theta;
}

double multiplicative_exponent(const NormalizedGen& g, const MarketPath& path, const LambdaPath& lam,
                               const GammaPath& gamma_so_far, std::size_t l) {
    if (l > gamma_so_far.days()) throw InputError("multiplicative_exponent: gamma path too short");
    double exponent = 0.0;
    for (std::size_t k = 0; k < l; ++k) {
        const DayView v = view_day(path, lam, k);
        const double shifted = g.shifted_value(v.lambda, v.mu_begin);
        if (!(shifted >= kPositivityFloor))
            throw StrategyError("G + c = " + std::to_string(shifted) +
                                    " is below the positivity floor; increase c",
                                k);
        const double dgamma = gamma_so_far.values[k] - (k == 0 ? 0.0 : gamma_so_far.values[k - 1]);
        exponent += dgamma / (shifted / g.scale());
    }
    return exponent;
}

std::vector<double> theta_multiplicative(const NormalizedGen& g, std::span<const double> lambda,
                                         std::span<const double> mu_begin, double exponent) {
    auto theta = theta_additive(g, lambda, mu_begin);
    const double factor = std::exp(exponent);
    for (double& t : theta) t *= factor;
    return theta;
}

Conversion self_financing_convert(std::span<const double> theta, std::span<const double> mu_begin,
                                  double v_begin) {
    Conversion out;
    double held = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) held += theta[i] * mu_begin[i];
    out.defect = held - v_begin;
    out.phi.resize(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) out.phi[i] = theta[i] - out.defect;
    return out;
}

// ---- ledger ----------------------------------------------------------------

std::vector<double> StrategyLedger::wealth_end() const {
    std::vector<double> v(days.size());
    for (std::size_t l = 0; l < days.size(); ++l) v[l] = days[l].v_end;
    return v;
}

double StrategyLedger::max_self_financing_residual(const MarketPath& path) const {
    double worst = 0.0;
    for (std::size_t l = 0; l < days.size(); ++l) {
        const WeightVector mu = begin_weights(path, l);
        double held = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) held += days[l].phi[i] * mu[i];
        worst = std::max(worst, std::abs(held - days[l].v_begin));
    }
    return worst;
}

double StrategyLedger::max_form_gap() const {
    double worst = 0.0;
    for (const auto& d : days) worst = std::max(worst, std::abs(d.v_end - d.v_end_incremental));
    return worst;
}

// ---- backtest --------------------------------------------------------------

BacktestResult run_backtest(const MarketPath& path, const NormalizedGen& g, const LambdaPath& lam,
                            StrategyMode mode) {
    check_grid(path, lam);
    check_lambda_compatible(*g.base, lam, path.asset_count());

    const std::size_t n = path.days();
    const std::size_t d = path.asset_count();

    BacktestResult result;
    result.ledger.mode = mode;
    result.ledger.c_shift = g.c_shift;
    result.ledger.days.reserve(n);
    result.gamma_defect.route = GammaRoute::defect;
    result.gamma_defect.values.reserve(n);

    bool has_closed = true;
    GammaPath closed;
    closed.route = GammaRoute::closed_form;

    double g_start = 0.0;
    double integral = 0.0;
    double closed_acc = 0.0;
    double gamma_prev = 0.0;
    double exponent = 0.0;
    double v_end_prev = 0.0;
    double sigma_end_prev = 0.0;

    auto fail = [&](const std::string& what, std::size_t l, bool positivity) {
        throw BacktestFailure(what, l, result.ledger, positivity);
    };

    for (std::size_t l = 0; l < n; ++l) {
        const DayView v = view_day(path, lam, l);
        try {
            check_domain_at(*g.base, v, l);
        } catch (const DomainError& e) {
            fail(e.what(), l, false);
        }

        DayRecord rec;
        rec.membership_changed = path.membership_changed(l);
        rec.v_begin = l == 0 ? 1.0 : v_end_prev * sigma_end_prev / total_begin(path, l);

        std::vector<double> grad(v.members.size());
        g.gradient(v.lambda, v.mu_begin, grad);
        if (!std::all_of(grad.begin(), grad.end(), [](double x) { return std::isfinite(x); }))
            fail("DG is not finite", l, false);

        std::vector<double> theta = grad;
        if (mode == StrategyMode::multiplicative) {
            const double shifted = g.shifted_value(v.lambda, v.mu_begin);
            if (!(shifted >= kPositivityFloor))
                fail("G + c = " + std::to_string(shifted) +
                         " is below the positivity floor 1e-10; increase c",
                     l, true);
            rec.exponent = exponent;
            const double factor = std::exp(exponent);
            if (!std::isfinite(factor)) fail("multiplicative exponent overflowed", l, true);
            for (double& t : theta) t *= factor;
        }

        const Conversion conv = self_financing_convert(theta, v.mu_begin, rec.v_begin);
        rec.defect = conv.defect;
        rec.theta.assign(d, 0.0);
        rec.phi.assign(d, 0.0);
        double v_end = 0.0;
        for (std::size_t k = 0; k < v.members.size(); ++k) {
            rec.theta[v.members[k]] = theta[k];
            rec.phi[v.members[k]] = conv.phi[k];
            v_end += conv.phi[k] * v.mu_end[k];
        }
        rec.v_end = v_end;
        rec.v_end_incremental = rec.v_begin + dot_increment(theta, v.mu_begin, v.mu_end);

        if (l == 0) g_start = g.value(v.lambda, v.mu_begin);
        rec.g_end = g.value(v.lambda, v.mu_end);
        integral += dot_increment(grad, v.mu_begin, v.mu_end);
        rec.gamma_defect = g_start - rec.g_end + integral;

        if (has_closed) {
            const auto inc = g.base->gamma_increment(v.lambda_prev, v.lambda, v.mu_begin, v.mu_end);
            if (inc) {
                closed_acc += *inc;
                rec.gamma_closed = closed_acc / g.scale();
                closed.values.push_back(rec.gamma_closed);
            } else {
                has_closed = false;
            }
        }

        if (mode == StrategyMode::multiplicative)
            exponent += (rec.gamma_defect - gamma_prev) / g.value(v.lambda, v.mu_begin);

        gamma_prev = rec.gamma_defect;
        v_end_prev = rec.v_end;
        sigma_end_prev = v.end.total;
        result.gamma_defect.values.push_back(rec.gamma_defect);
        result.ledger.days.push_back(std::move(rec));
    }
    if (has_closed) result.gamma_closed = std::move(closed);
    return result;
}

ArbitrageVerdict arbitrage_check(const GammaPath& gamma, StrategyMode mode, double epsilon) {
    if (!(epsilon >= 0.0)) throw ConfigError("arbitrage_check: epsilon must be >= 0");
    ArbitrageVerdict out;
    out.threshold = mode == StrategyMode::additive ? 1.0 : 1.0 + epsilon;
    out.max_gamma = gamma.values.empty() ? 0.0 : gamma.values.front();
    for (std::size_t l = 0; l < gamma.values.size(); ++l) {
        out.max_gamma = std::max(out.max_gamma, gamma.values[l]);
        if (!out.t_star && gamma.values[l] > out.threshold) out.t_star = l;
    }
    return out;
}

}  // namespace fungen
