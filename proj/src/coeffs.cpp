#include "quadinv/coeffs.hpp"

#include <array>
#include <cmath>

#include "quadinv/errors.hpp"
#include "quadinv/ode.hpp"

namespace quadinv {

TimeFunction TimeFunction::constant(double v) {
    return {[v](double) { return v; }, [](double) { return 0.0; }};
}

CoefficientSet::CoefficientSet(std::string name, TimeFunction fa, TimeFunction fb,
                               TimeFunction fc, TimeFunction fd, double t_max)
    : name_(std::move(name)), a_(std::move(fa)), b_(std::move(fb)), c_(std::move(fc)),
      d_(std::move(fd)), t_max_(t_max) {
    if (!(t_max_ > 0.0) || !std::isfinite(t_max_))
        throw DomainError("CoefficientSet: t_max must be positive and finite");
    for (const TimeFunction* f : {&a_, &b_, &c_, &d_}) {
        if (!f->value || !f->derivative) throw UsageError("CoefficientSet: missing function");
    }
    // Sampled sanity check of the standing assumptions on the domain.
    constexpr int samples = 257;
    for (int k = 0; k < samples; ++k) {
        const double t = t_max_ * k / (samples - 1);
        const double vals[] = {a(t), b(t), c(t), d(t), da(t), db(t), dc(t), dd(t)};
        for (double v : vals) {
            if (!std::isfinite(v))
                throw DomainError("CoefficientSet '" + name_ + "': non-finite coefficient");
        }
        if (a(t) == 0.0) throw DomainError("CoefficientSet '" + name_ + "': a(t) vanishes");
        if (k > 0 && std::signbit(a(t)) != std::signbit(a(0.0)))
            throw DomainError("CoefficientSet '" + name_ + "': a(t) changes sign");
    }
}

bool CoefficientSet::contains(double t) const noexcept {
    const double tol = 1e-12 * t_max_;
    return t >= -tol && t <= t_max_ + tol;
}

void CoefficientSet::require_time(double t) const {
    if (!contains(t)) {
        throw DomainError("time " + std::to_string(t) + " outside [0, " +
                          std::to_string(t_max_) + "] for '" + name_ + "'");
    }
}

namespace {

TimeFunction expo(double amp, double k) {
    return {[amp, k](double t) { return amp * std::exp(k * t); },
            [amp, k](double t) { return amp * k * std::exp(k * t); }};
}

} // namespace

CoefficientSet make_preset(PresetId id, double t_max) {
    using TF = TimeFunction;
    const TF half = TF::constant(0.5);
    const TF zero = TF::constant(0.0);
    switch (id) {
    case PresetId::free:
        return {"free", half, zero, zero, zero, t_max};
    case PresetId::sho:
        return {"sho", half, half, zero, zero, t_max};
    case PresetId::parametric: {
        TF b{[](double t) { return 0.5 * (1.0 + 0.2 * std::cos(t)); },
             [](double t) { return -0.1 * std::sin(t); }};
        return {"parametric", half, b, zero, zero, t_max};
    }
    case PresetId::caldirola_kanai:
        return {"caldirola_kanai", expo(0.5, -0.2), expo(0.5, 0.2), zero, zero, t_max};
    case PresetId::skew:
        return {"skew", half, half, TF::constant(0.3), TF::constant(0.1), t_max};
    }
    throw UsageError("make_preset: unknown preset");
}

namespace {
constexpr std::array<std::pair<PresetId, std::string_view>, 5> preset_names{{
    {PresetId::free, "free"},
    {PresetId::sho, "sho"},
    {PresetId::parametric, "parametric"},
    {PresetId::caldirola_kanai, "caldirola_kanai"},
    {PresetId::skew, "skew"},
}};
} // namespace

std::optional<PresetId> parse_preset(std::string_view name) {
    for (const auto& [id, n] : preset_names) {
        if (n == name) return id;
    }
    return std::nullopt;
}

std::string_view preset_name(PresetId id) {
    for (const auto& [pid, n] : preset_names) {
        if (pid == id) return n;
    }
    return "unknown";
}

const std::vector<PresetId>& all_presets() {
    static const std::vector<PresetId> ids{PresetId::free, PresetId::sho, PresetId::parametric,
                                           PresetId::caldirola_kanai, PresetId::skew};
    return ids;
}

TauSigma tau_sigma_unchecked(const CoefficientSet& h, double t) {
    const double a = h.a(t), b = h.b(t), c = h.c(t), d = h.d(t);
    const double ra = h.da(t) / a;
    return {ra + 2.0 * c - 2.0 * d, a * b - c * d + 0.5 * (c * ra - h.dc(t))};
}

TauSigma tau_sigma(const CoefficientSet& h, double t) {
    h.require_time(t);
    return tau_sigma_unchecked(h, t);
}

double lambda_factor(const CoefficientSet& h, double t) {
    h.require_time(t);
    if (t <= 0.0) return 1.0;
    const double y0 = 0.0;
    auto traj = integrate_dense(
        1, [&h](double s, const double*, double* dy) { dy[0] = h.c(s) - h.d(s); }, 0.0, &y0, t);
    return std::exp(traj.value(t, 0));
}

} // namespace quadinv
