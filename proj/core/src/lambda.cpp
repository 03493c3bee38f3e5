#include "fungen/lambda.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fungen/errors.hpp"

namespace fungen {

namespace {

Monotonicity monotone_from_sign(double s) {
    if (s > 0.0) return Monotonicity::nondecreasing;
    if (s < 0.0) return Monotonicity::nonincreasing;
    return Monotonicity::constant;
}

void assert_monotone(const LambdaPath& lam) {
    if (lam.monotone == Monotonicity::none) return;
    for (std::size_t l = 1; l < lam.days(); ++l) {
        for (std::size_t c = 0; c < lam.dim(); ++c) {
            const double diff = lam.values(l, c) - lam.values(l - 1, c);
            const bool bad = (lam.monotone == Monotonicity::nondecreasing && diff < 0.0) ||
                             (lam.monotone == Monotonicity::nonincreasing && diff > 0.0) ||
                             (lam.monotone == Monotonicity::constant && diff != 0.0);
            if (bad)
                throw Error("lambda path of kind " + lam.kind + " breaks its monotonicity at day " +
                            std::to_string(l));
        }
    }
}

}  // namespace

std::string to_string(LambdaKind kind) {
    switch (kind) {
        case LambdaKind::constant: return "constant";
        case LambdaKind::exp_deterministic: return "exp_deterministic";
        case LambdaKind::exp_qv: return "exp_qv";
        case LambdaKind::qv_linear: return "qv_linear";
        case LambdaKind::moving_average: return "moving_average";
        case LambdaKind::clip: return "clip";
    }
    return "unknown";
}

LambdaKind parse_lambda_kind(const std::string& name) {
    for (auto k : {LambdaKind::constant, LambdaKind::exp_deterministic, LambdaKind::exp_qv,
                   LambdaKind::qv_linear, LambdaKind::moving_average, LambdaKind::clip})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown lambda kind '" + name + "'");
}

LambdaSpec LambdaSpec::constant(double value) {
    LambdaSpec s;
    s.kind = LambdaKind::constant;
    s.value = value;
    return s;
}

LambdaSpec LambdaSpec::exp_deterministic(double rate) {
    LambdaSpec s;
    s.kind = LambdaKind::exp_deterministic;
    s.rate = rate;
    return s;
}

LambdaSpec LambdaSpec::exp_qv(double scale) {
    LambdaSpec s;
    s.kind = LambdaKind::exp_qv;
    s.scale = scale;
    return s;
}

LambdaSpec LambdaSpec::qv_linear(double gamma, double offset) {
    LambdaSpec s;
    s.kind = LambdaKind::qv_linear;
    s.gamma = gamma;
    s.offset = offset;
    return s;
}

LambdaSpec LambdaSpec::moving_average(std::size_t window) {
    LambdaSpec s;
    s.kind = LambdaKind::moving_average;
    s.window = window;
    return s;
}

LambdaSpec LambdaSpec::clipped(LambdaSpec inner, double xi_lo, double xi_hi) {
    LambdaSpec s;
    s.kind = LambdaKind::clip;
    s.xi_lo = xi_lo;
    s.xi_hi = xi_hi;
    s.inner = std::make_shared<const LambdaSpec>(std::move(inner));
    return s;
}

void LambdaSpec::validate() const {
    auto finite = [](double v, const char* what) {
        if (!std::isfinite(v)) throw ConfigError(std::string("lambda: ") + what + " must be finite");
    };
    switch (kind) {
        case LambdaKind::constant: finite(value, "value"); break;
        case LambdaKind::exp_deterministic: finite(rate, "rate"); break;
        case LambdaKind::exp_qv: finite(scale, "scale"); break;
        case LambdaKind::qv_linear:
            finite(gamma, "gamma");
            finite(offset, "offset");
            break;
        case LambdaKind::moving_average:
            if (window < 1) throw ConfigError("lambda: window must be at least 1 day");
            break;
        case LambdaKind::clip:
            if (!(xi_lo > 0.0 && xi_lo < xi_hi)) throw ConfigError("lambda: need 0 < xi_lo < xi_hi");
            if (!inner) throw ConfigError("lambda: clip needs an inner kind");
            inner->validate();
            break;
    }
}

std::string LambdaSpec::describe() const {
    std::ostringstream os;
    os << to_string(kind);
    switch (kind) {
        case LambdaKind::constant: os << "(value=" << value << ')'; break;
        case LambdaKind::exp_deterministic: os << "(rate=" << rate << ')'; break;
        case LambdaKind::exp_qv: os << "(scale=" << scale << ')'; break;
        case LambdaKind::qv_linear: os << "(gamma=" << gamma << ",offset=" << offset << ')'; break;
        case LambdaKind::moving_average: os << "(window=" << window << ')'; break;
        case LambdaKind::clip:
            os << "(xi_lo=" << xi_lo << ",xi_hi=" << xi_hi << ",inner=" << inner->describe() << ')';
            break;
    }
    return os.str();
}

double LambdaPath::total_variation() const {
    double tv = 0.0;
    for (std::size_t l = 1; l < days(); ++l)
        for (std::size_t c = 0; c < dim(); ++c) tv += std::abs(values(l, c) - values(l - 1, c));
    return tv;
}

double QVPath::total(std::size_t l) const {
    double s = 0.0;
    for (double v : values.row(l)) s += v;
    return s;
}

QVPath realized_qv(std::span<const WeightVector> begin, std::span<const WeightVector> end) {
    if (begin.size() != end.size())
        throw InputError("realized_qv: " + std::to_string(begin.size()) + " begin vs " +
                         std::to_string(end.size()) + " end weight vectors");
    QVPath qv;
    if (begin.empty()) return qv;
    const std::size_t d = begin.front().size();
    qv.values = Matrix(begin.size(), d, 0.0);
    for (std::size_t l = 0; l < begin.size(); ++l) {
        if (begin[l].size() != d || end[l].size() != d)
            throw InputError("realized_qv: weight vector length mismatch on day " + std::to_string(l));
        for (std::size_t i = 0; i < d; ++i) {
            const double dx = end[l][i] - begin[l][i];
            qv.values(l, i) = (l == 0 ? 0.0 : qv.values(l - 1, i)) + dx * dx;
        }
    }
    return qv;
}

QVPath realized_qv(const MarketPath& path) {
    std::vector<WeightVector> b, e;
    b.reserve(path.days());
    e.reserve(path.days());
    for (std::size_t l = 0; l < path.days(); ++l) {
        b.push_back(begin_weights(path, l));
        e.push_back(end_of_day(path, l).weights);
    }
    return realized_qv(b, e);
}

LambdaPath build_lambda(const LambdaSpec& spec, const MarketPath& path) {
    spec.validate();
    const std::size_t n = path.days();
    LambdaPath lam;
    lam.kind = spec.describe();

    switch (spec.kind) {
        case LambdaKind::constant:
            lam.values = Matrix(n, 1, spec.value);
            lam.monotone = Monotonicity::constant;
            lam.fv_bound = 0.0;
            break;
        case LambdaKind::exp_deterministic:
            lam.values = Matrix(n, 1);
            for (std::size_t l = 0; l < n; ++l)
                lam.values(l, 0) = std::exp(spec.rate * static_cast<double>(l));
            lam.monotone = monotone_from_sign(spec.rate);
            lam.fv_bound = n == 0 ? 0.0 : std::abs(lam.values(n - 1, 0) - 1.0) * (1.0 + 1e-12);
            break;
        case LambdaKind::exp_qv:
        case LambdaKind::qv_linear: {
            const QVPath qv = realized_qv(path);
            lam.values = Matrix(n, 1);
            for (std::size_t l = 0; l < n; ++l) {
                const double total = qv.total(l);
                lam.values(l, 0) = spec.kind == LambdaKind::exp_qv ? std::exp(spec.scale * total)
                                                                    : spec.offset + spec.gamma * total;
            }
            lam.monotone = monotone_from_sign(spec.kind == LambdaKind::exp_qv ? spec.scale : spec.gamma);
            break;
        }
        case LambdaKind::moving_average: {
            const std::size_t d = path.asset_count();
            const std::size_t w = spec.window;
            lam.values = Matrix(n, d);
            std::vector<WeightVector> weights;
            weights.reserve(n);
            for (std::size_t l = 0; l < n; ++l) weights.push_back(begin_weights(path, l));
            for (std::size_t l = 0; l < n; ++l) {
                for (std::size_t i = 0; i < d; ++i) {
                    // Window covers days l-w+1..l; days before 0 repeat μ_i(0).
                    double sum = 0.0;
                    const std::size_t pad = l + 1 < w ? w - (l + 1) : 0;
                    sum += static_cast<double>(pad) * weights[0][i];
                    for (std::size_t k = l + 1 - std::min(w, l + 1); k <= l; ++k) sum += weights[k][i];
                    lam.values(l, i) = sum / static_cast<double>(w);
                }
            }
            lam.monotone = Monotonicity::none;
            break;
        }
        case LambdaKind::clip: {
            LambdaPath inner = build_lambda(*spec.inner, path);
            lam.values = inner.values;
            for (std::size_t l = 0; l < n; ++l)
                for (double& v : lam.values.row(l)) v = std::min(spec.xi_hi, std::max(spec.xi_lo, v));
            lam.monotone = inner.monotone;
            break;
        }
    }
    assert_monotone(lam);
    if (lam.fv_bound && lam.total_variation() > *lam.fv_bound)
        throw Error("lambda path exceeds its declared total-variation bound");
    return lam;
}

}  // namespace fungen
