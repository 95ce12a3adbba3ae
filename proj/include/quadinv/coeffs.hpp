#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace quadinv {

// A scalar function of time together with its exact derivative.
struct TimeFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative;

    static TimeFunction constant(double v);
};

enum class PresetId { free, sho, parametric, caldirola_kanai, skew };

inline constexpr double default_t_max = 3.0;

// H = a p^2 + b x^2 + c p x + d x p on [0, t_max].
class CoefficientSet {
public:
    CoefficientSet(std::string name, TimeFunction a, TimeFunction b, TimeFunction c,
                   TimeFunction d, double t_max = default_t_max);

    double a(double t) const { return a_.value(t); }
    double b(double t) const { return b_.value(t); }
    double c(double t) const { return c_.value(t); }
    double d(double t) const { return d_.value(t); }
    double da(double t) const { return a_.derivative(t); }
    double db(double t) const { return b_.derivative(t); }
    double dc(double t) const { return c_.derivative(t); }
    double dd(double t) const { return d_.derivative(t); }

    double t_max() const noexcept { return t_max_; }
    const std::string& name() const noexcept { return name_; }

    bool contains(double t) const noexcept;
    // Throws DomainError when t is outside [0, t_max].
    void require_time(double t) const;

private:
    std::string name_;
    TimeFunction a_, b_, c_, d_;
    double t_max_;
};

CoefficientSet make_preset(PresetId id, double t_max = default_t_max);
std::optional<PresetId> parse_preset(std::string_view name);
std::string_view preset_name(PresetId id);
const std::vector<PresetId>& all_presets();

struct TauSigma {
    double tau;
    double sigma;
};

// Coefficients of mu'' - tau mu' + 4 sigma mu = 0.
TauSigma tau_sigma(const CoefficientSet& h, double t);

// Same, without the domain check; for use inside integrator right-hand sides.
TauSigma tau_sigma_unchecked(const CoefficientSet& h, double t);

// exp(int_0^t (c - d) ds), integrated by the ODE engine.
double lambda_factor(const CoefficientSet& h, double t);

} // namespace quadinv
