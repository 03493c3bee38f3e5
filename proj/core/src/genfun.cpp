#include "fungen/genfun.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fungen/errors.hpp"

namespace fungen {

namespace {

double scalar_lambda(std::span<const double> lambda, const char* who) {
    if (lambda.size() != 1)
        throw DomainError(std::string(who) + " expects a scalar lambda, got " +
                          std::to_string(lambda.size()) + " components");
    return lambda[0];
}

void require_positive_weights(std::span<const double> x, const char* who) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > 0.0))
            throw DomainError(std::string(who) + " requires x in the open simplex (x_" +
                              std::to_string(i) + " = " + std::to_string(x[i]) + ")");
}

void require_finite(std::span<const double> v, const char* what) {
    for (double e : v)
        if (!std::isfinite(e)) throw DomainError(std::string(what) + " is not finite");
}

class NegatedFunction final : public GenFunction {
public:
    explicit NegatedFunction(GenFunctionPtr inner) : inner_(std::move(inner)) {}
    std::string name() const override { return "-" + inner_->name(); }
    GenDomain domain() const override { return inner_->domain(); }
    LyapunovHint lyapunov_hint() const override { return LyapunovHint::never_in_general; }
    std::size_t lambda_dim(std::size_t d) const override { return inner_->lambda_dim(d); }
    bool broadcasts_scalar_lambda() const override { return inner_->broadcasts_scalar_lambda(); }
    void check_domain(std::span<const double> lambda, std::span<const double> x) const override {
        inner_->check_domain(lambda, x);
    }
    double value(std::span<const double> lambda, std::span<const double> x) const override {
        return -inner_->value(lambda, x);
    }
    void gradient(std::span<const double> lambda, std::span<const double> x,
                  std::span<double> out) const override {
        inner_->gradient(lambda, x, out);
        for (double& v : out) v = -v;
    }
    std::optional<double> gamma_increment(std::span<const double> lp, std::span<const double> lc,
                                          std::span<const double> xb,
                                          std::span<const double> xe) const override {
        auto inc = inner_->gamma_increment(lp, lc, xb, xe);
        if (inc) return -*inc;
        return std::nullopt;
    }
    bool rank_based() const override { return inner_->rank_based(); }
    LambdaBox lambda_box(std::size_t d) const override { return inner_->lambda_box(d); }

private:
    GenFunctionPtr inner_;
};

class FlippedGradientFunction final : public GenFunction {
public:
    explicit FlippedGradientFunction(GenFunctionPtr inner) : inner_(std::move(inner)) {}
    std::string name() const override { return inner_->name(); }
    GenDomain domain() const override { return inner_->domain(); }
    LyapunovHint lyapunov_hint() const override { return inner_->lyapunov_hint(); }
    std::size_t lambda_dim(std::size_t d) const override { return inner_->lambda_dim(d); }
    bool broadcasts_scalar_lambda() const override { return inner_->broadcasts_scalar_lambda(); }
    void check_domain(std::span<const double> lambda, std::span<const double> x) const override {
        inner_->check_domain(lambda, x);
    }
    double value(std::span<const double> lambda, std::span<const double> x) const override {
        return inner_->value(lambda, x);
    }
    void gradient(std::span<const double> lambda, std::span<const double> x,
                  std::span<double> out) const override {
        inner_->gradient(lambda, x, out);
        for (double& v : out) v = -v;
    }
    std::optional<double> gamma_increment(std::span<const double> lp, std::span<const double> lc,
                                          std::span<const double> xb,
                                          std::span<const double> xe) const override {
        return inner_->gamma_increment(lp, lc, xb, xe);
    }
    bool rank_based() const override { return inner_->rank_based(); }
    LambdaBox lambda_box(std::size_t d) const override { return inner_->lambda_box(d); }

private:
    GenFunctionPtr inner_;
};

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

std::size_t count_param(const std::map<std::string, double>& params, const std::string& key,
                        std::size_t fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    if (!(it->second >= 1.0) || it->second != std::floor(it->second))
        throw ConfigError(key + " must be a positive integer");
    return static_cast<std::size_t>(it->second);
}

}  // namespace

GenEval GenFunction::eval(std::span<const double> lambda, std::span<const double> x) const {
    check_domain(lambda, x);
    GenEval out;
    out.value = value(lambda, x);
    out.gradient.assign(x.size(), 0.0);
    gradient(lambda, x, out.gradient);
    if (!std::isfinite(out.value)) throw DomainError(name() + ": G is not finite");
    require_finite(out.gradient, "DG");
    return out;
}

// ---- entropy ---------------------------------------------------------------

void EntropyFunction::check_domain(std::span<const double> lambda, std::span<const double> x) const {
    const double lam = scalar_lambda(lambda, "entropy");
    if (!(lam > 0.0)) throw DomainError("entropy requires lambda > 0");
    require_positive_weights(x, "entropy");
}

double EntropyFunction::value(std::span<const double> lambda, std::span<const double> x) const {
    double h = 0.0;
    for (double xi : x) h -= xi * std::log(xi);
    return lambda[0] * h;
}

void EntropyFunction::gradient(std::span<const double> lambda, std::span<const double> x,
                               std::span<double> out) const {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -lambda[0] * (1.0 + std::log(x[i]));
}

std::optional<double> EntropyFunction::gamma_increment(std::span<const double> lambda_prev,
                                                       std::span<const double> lambda_cur,
                                                       std::span<const double> x_begin,
                                                       std::span<const double> x_end) const {
    double xlogx = 0.0;
    double qv = 0.0;
    for (std::size_t i = 0; i < x_begin.size(); ++i) {
        xlogx += x_begin[i] * std::log(x_begin[i]);
        const double dx = x_end[i] - x_begin[i];
        qv += dx * dx / x_begin[i];
    }
    return xlogx * (lambda_cur[0] - lambda_prev[0]) + 0.5 * lambda_cur[0] * qv;
}

// ---- power diversity -------------------------------------------------------

PowerDiversityFunction::PowerDiversityFunction(double alpha, double p) : alpha_(alpha), p_(p) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("power_diversity: alpha must lie in [0, 1]");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("power_diversity: p must lie in (0, 1)");
}

double PowerDiversityFunction::blended(std::span<const double> lambda, std::span<const double> x,
                                       std::size_t i) const {
    const double lam = lambda.size() == 1 ? lambda[0] : lambda[i];
    return alpha_ * x[i] + (1.0 - alpha_) * lam;
}

void PowerDiversityFunction::check_domain(std::span<const double> lambda,
                                          std::span<const double> x) const {
    if (lambda.size() != 1 && lambda.size() != x.size())
        throw DomainError("power_diversity: lambda has " + std::to_string(lambda.size()) +
                          " components for " + std::to_string(x.size()) + " assets");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(blended(lambda, x, i) > 0.0))
            throw DomainError("power_diversity: non-positive blended weight at asset " +
                              std::to_string(i));
}

double PowerDiversityFunction::value(std::span<const double> lambda, std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(blended(lambda, x, i), p_);
    return std::pow(s, 1.0 / p_);
}

void PowerDiversityFunction::gradient(std::span<const double> lambda, std::span<const double> x,
                                      std::span<double> out) const {
    const double g = value(lambda, x);
    const double scale = alpha_ * std::pow(g, 1.0 - p_);
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = scale * std::pow(blended(lambda, x, i), p_ - 1.0);
}

std::optional<double> PowerDiversityFunction::gamma_increment(std::span<const double> lambda_prev,
                                                              std::span<const double> lambda_cur,
                                                              std::span<const double> x_begin,
                                                              std::span<const double> x_end) const {
    const std::size_t d = x_begin.size();
    const auto lam_at = [](std::span<const double> l, std::size_t i) {
        return l.size() == 1 ? l[0] : l[i];
    };

    // dΛ term at (λ_prev, x_begin).
    double dlambda_term = 0.0;
    if (alpha_ < 1.0) {
        const double g_prev = value(lambda_prev, x_begin);
        for (std::size_t i = 0; i < d; ++i) {
            const double dl = lam_at(lambda_cur, i) - lam_at(lambda_prev, i);
            if (dl == 0.0) continue;
            dlambda_term += std::pow(g_prev / blended(lambda_prev, x_begin, i), 1.0 - p_) * dl;
        }
        dlambda_term *= -(1.0 - alpha_);
    }

    // Second-order term at (λ_cur, x_begin).
    double s = 0.0;
    double cross = 0.0;
    double diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double b = blended(lambda_cur, x_begin, i);
        const double dx = x_end[i] - x_begin[i];
        s += std::pow(b, p_);
        cross += std::pow(b, p_ - 1.0) * dx;
        diag += std::pow(b, p_ - 2.0) * dx * dx;
    }
    const double g = std::pow(s, 1.0 / p_);
    const double qv_term =
        -0.5 * alpha_ * alpha_ * (1.0 - p_) * std::pow(g, 1.0 - p_) * (cross * cross / s - diag);
    return dlambda_term + qv_term;
}

LambdaBox PowerDiversityFunction::lambda_box(std::size_t d) const {
    return {d, 0.5 / static_cast<double>(d), 2.0 / static_cast<double>(d)};
}

// ---- quadratic -------------------------------------------------------------

void QuadraticFunction::check_domain(std::span<const double> lambda, std::span<const double>) const {
    if (!std::isfinite(scalar_lambda(lambda, "quadratic")))
        throw DomainError("quadratic requires a finite lambda");
}

double QuadraticFunction::value(std::span<const double> lambda, std::span<const double> x) const {
    double sq = 0.0;
    for (double xi : x) sq += xi * xi;
    return lambda[0] - sq;
}

void QuadraticFunction::gradient(std::span<const double>, std::span<const double> x,
                                 std::span<double> out) const {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -2.0 * x[i];
}

std::optional<double> QuadraticFunction::gamma_increment(std::span<const double> lambda_prev,
                                                         std::span<const double> lambda_cur,
                                                         std::span<const double> x_begin,
                                                         std::span<const double> x_end) const {
    double qv = 0.0;
    for (std::size_t i = 0; i < x_begin.size(); ++i) {
        const double dx = x_end[i] - x_begin[i];
        qv += dx * dx;
    }
    return -(lambda_cur[0] - lambda_prev[0]) + qv;
}

// ---- ranked hybrid ---------------------------------------------------------

RankedHybridFunction::RankedHybridFunction(std::size_t d1, std::size_t d2, double xi_lo, double xi_hi)
    : d1_(d1), d2_(d2), xi_lo_(xi_lo), xi_hi_(xi_hi) {
    if (!(d1 >= 1 && d1 < d2)) throw ConfigError("ranked_hybrid: need 1 <= d1 < d2");
    if (!(xi_lo > 0.0 && xi_lo < xi_hi)) throw ConfigError("ranked_hybrid: need 0 < xi_lo < xi_hi");
}

double RankedHybridFunction::clip(double lambda_raw) const noexcept {
    return std::min(xi_hi_, std::max(xi_lo_, lambda_raw));
}

void RankedHybridFunction::check_domain(std::span<const double> lambda, std::span<const double> x) const {
    const double raw = scalar_lambda(lambda, "ranked_hybrid");
    if (std::isnan(raw)) throw DomainError("ranked_hybrid: lambda is NaN");
    if (d2_ > x.size())
        throw DomainError("ranked_hybrid: d2 = " + std::to_string(d2_) + " exceeds " +
                          std::to_string(x.size()) + " assets");
    require_positive_weights(x, "ranked_hybrid");
}

double RankedHybridFunction::value(std::span<const double> lambda, std::span<const double> x) const {
    const double lam = clip(lambda[0]);
    std::vector<double> y(x.begin(), x.end());
    std::sort(y.begin(), y.end(), std::greater<>());
    double top = 0.0;
    for (std::size_t l = 0; l < d1_; ++l) top += y[l] * std::log(y[l]);
    double mid = 0.0;
    for (std::size_t l = d1_; l < d2_; ++l) mid += y[l] * y[l];
    return -lam * top + 1.0 - mid;
}

void RankedHybridFunction::gradient(std::span<const double> lambda, std::span<const double> x,
                                    std::span<double> out) const {
    const double lam = clip(lambda[0]);
    const RankedWeights rw = rank_weights(x);
    const std::size_t d = x.size();
    std::vector<double> rank_grad(d, 0.0);
    for (std::size_t l = 0; l < d; ++l) {
        if (l < d1_)
            rank_grad[l] = -lam * std::log(rw.sorted[l]) - lam;
        else if (l < d2_)
            rank_grad[l] = -2.0 * rw.sorted[l];
    }
    // D_i G = Σ_l 1{x_i = x_(l)} / N_l · D_l G. Tied ranks form contiguous
    // blocks of the sorted vector, so average each block.
    std::size_t start = 0;
    while (start < d) {
        std::size_t end = start + 1;
        while (end < d && rw.sorted[end] == rw.sorted[start]) ++end;
        double avg = 0.0;
        for (std::size_t l = start; l < end; ++l) avg += rank_grad[l];
        avg /= static_cast<double>(end - start);
        for (std::size_t l = start; l < end; ++l) out[rw.order[l]] = avg;
        start = end;
    }
}

std::optional<double> RankedHybridFunction::gamma_increment(std::span<const double> lambda_prev,
                                                            std::span<const double> lambda_cur,
                                                            std::span<const double> x_begin,
                                                            std::span<const double> x_end) const {
    // Ranks are frozen at the start of the day; local-time terms are omitted.
    const RankedWeights rw = rank_weights(x_begin);
    const double lam_prev = clip(lambda_prev[0]);
    const double lam_cur = clip(lambda_cur[0]);
    double xlogx = 0.0;
    double top_qv = 0.0;
    double mid_qv = 0.0;
    for (std::size_t l = 0; l < d2_; ++l) {
        const std::size_t i = rw.order[l];
        const double dx = x_end[i] - x_begin[i];
        if (l < d1_) {
            xlogx += x_begin[i] * std::log(x_begin[i]);
            top_qv += dx * dx / x_begin[i];
        } else {
            mid_qv += dx * dx;
        }
    }
    return xlogx * (lam_cur - lam_prev) + 0.5 * lam_cur * top_qv + mid_qv;
}

// ---- market ----------------------------------------------------------------

void MarketFunction::gradient(std::span<const double>, std::span<const double>,
                              std::span<double> out) const {
    std::fill(out.begin(), out.end(), 1.0);
}

// ---- catalog ---------------------------------------------------------------

GenFunctionPtr negated(GenFunctionPtr inner) {
    return std::make_shared<NegatedFunction>(std::move(inner));
}

GenFunctionPtr with_flipped_gradient(GenFunctionPtr inner) {
    return std::make_shared<FlippedGradientFunction>(std::move(inner));
}

GenFunctionPtr make_genfun(const std::string& name, const std::map<std::string, double>& params) {
    auto allow = [&](std::initializer_list<const char*> keys) {
        for (const auto& [k, v] : params) {
            (void)v;
            if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
                throw ConfigError(name + ": unknown parameter '" + k + "'");
        }
    };
    if (name == "power_diversity") allow({"alpha", "p"});
    else if (name == "ranked_hybrid") allow({"d1", "d2", "xi_lo", "xi_hi"});
    else allow({});
    if (name == "entropy") return std::make_shared<EntropyFunction>();
    if (name == "quadratic") return std::make_shared<QuadraticFunction>();
    if (name == "market") return std::make_shared<MarketFunction>();
    if (name == "power_diversity")
        return std::make_shared<PowerDiversityFunction>(param(params, "alpha", 1.0),
                                                        param(params, "p", 0.8));
    if (name == "ranked_hybrid")
        return std::make_shared<RankedHybridFunction>(count_param(params, "d1", 1),
                                                      count_param(params, "d2", 2),
                                                      param(params, "xi_lo", 0.5),
                                                      param(params, "xi_hi", 2.0));
    throw ConfigError("unknown generating function '" + name + "'");
}

GenEval entropy(double lambda, const WeightVector& x) {
    return EntropyFunction{}.eval(std::span<const double>(&lambda, 1), x.values());
}

GenEval power_diversity(std::span<const double> lambda, const WeightVector& x, double alpha, double p) {
    return PowerDiversityFunction{alpha, p}.eval(lambda, x.values());
}

GenEval quadratic(double lambda, const WeightVector& x) {
    return QuadraticFunction{}.eval(std::span<const double>(&lambda, 1), x.values());
}

GenEval ranked_hybrid(double lambda_raw, const WeightVector& x, std::size_t d1, std::size_t d2,
                      double xi_lo, double xi_hi) {
    return RankedHybridFunction{d1, d2, xi_lo, xi_hi}.eval(std::span<const double>(&lambda_raw, 1),
                                                          x.values());
}

RankedWeights rank_weights(std::span<const double> x) {
    const std::size_t d = x.size();
    RankedWeights rw;
    rw.order.resize(d);
    std::iota(rw.order.begin(), rw.order.end(), std::size_t{0});
    std::stable_sort(rw.order.begin(), rw.order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });
    rw.sorted.resize(d);
    rw.rank.resize(d);
    for (std::size_t r = 0; r < d; ++r) {
        rw.sorted[r] = x[rw.order[r]];
        rw.rank[rw.order[r]] = r;
    }
    rw.counts.assign(d, 0);
    for (std::size_t r = 0; r < d; ++r)
        rw.counts[r] = static_cast<std::size_t>(std::count(x.begin(), x.end(), rw.sorted[r]));
    return rw;
}

// ---- condition spot checks -------------------------------------------------

ConditionReport spot_check_conditions(const GenFunction& g, std::size_t sample_count,
                                      std::uint64_t seed, std::size_t d) {
    if (sample_count < 2) throw ConfigError("spot_check_conditions needs at least 2 samples");
    if (d < 2) throw ConfigError("spot_check_conditions needs d >= 2");

    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    const LambdaBox box = g.lambda_box(d);
    std::uniform_real_distribution<double> lam_dist(box.lo, box.hi);

    auto draw_simplex = [&] {
        std::vector<double> x(d);
        for (;;) {
            double total = 0.0;
            for (double& v : x) total += (v = expo(rng));
            bool ok = true;
            for (double& v : x) {
                v /= total;
                ok = ok && v > 1e-9;
            }
            if (ok) return x;
        }
    };
    auto draw_lambda = [&] {
        std::vector<double> l(box.dim);
        for (double& v : l) v = lam_dist(rng);
        return l;
    };

    ConditionReport report;
    report.samples = sample_count;
    report.dimension = d;
    report.local_time_omitted = g.rank_based();
    report.worst_concavity_gap = std::numeric_limits<double>::infinity();

    for (std::size_t s = 0; s < sample_count; ++s) {
        // (ai) difference quotient in λ at fixed x.
        {
            const auto x = draw_simplex();
            const auto l1 = draw_lambda();
            const auto l2 = draw_lambda();
            double dist = 0.0;
            for (std::size_t k = 0; k < l1.size(); ++k) dist += (l1[k] - l2[k]) * (l1[k] - l2[k]);
            dist = std::sqrt(dist);
            if (dist > 0.0) {
                g.check_domain(l1, x);
                g.check_domain(l2, x);
                const double q = std::abs(g.value(l1, x) - g.value(l2, x)) / dist;
                if (!std::isfinite(q)) report.lipschitz_ok = false;
                else report.lipschitz_estimate = std::max(report.lipschitz_estimate, q);
            }
        }
        // (bii) midpoint concavity in x at fixed λ.
        {
            const auto lam = draw_lambda();
            const auto x = draw_simplex();
            const auto y = draw_simplex();
            std::vector<double> mid(d);
            for (std::size_t i = 0; i < d; ++i) mid[i] = 0.5 * (x[i] + y[i]);
            g.check_domain(lam, x);
            g.check_domain(lam, y);
            const double gx = g.value(lam, x);
            const double gy = g.value(lam, y);
            const double gm = g.value(lam, mid);
            const double avg = 0.5 * (gx + gy);
            const double gap = gm - avg;
            const double tol = 1e-12 * (1.0 + std::abs(gx) + std::abs(gy));
            if (gap < report.worst_concavity_gap) report.worst_concavity_gap = gap;
            if (gap < -tol) {
                if (report.concavity_violations == 0)
                    report.witness = ConcavityWitness{lam, x, y, gm, avg};
                ++report.concavity_violations;
            }
        }
    }
    return report;
}

}  // namespace fungen
