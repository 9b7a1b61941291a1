#pragma once

// Packet-size laws. Each law is parameterized by its mean X̄ alone:
//   exp   Exp(1/X̄)
//   det   point mass at X̄
//   unif  U(0, 2X̄)

#include <charconv>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <string_view>

#include "hsc/errors.hpp"
#include "hsc/rng.hpp"

namespace hsc {

enum class PacketLaw { Exponential, Deterministic, Uniform };

/// Short grammar tag: "exp", "det" or "unif".
constexpr std::string_view law_tag(PacketLaw law) noexcept {
    switch (law) {
        case PacketLaw::Exponential: return "exp";
        case PacketLaw::Deterministic: return "det";
        case PacketLaw::Uniform: return "unif";
    }
    return "?";
}

class DistributionSpec {
public:
    DistributionSpec(PacketLaw kind, double mean) : kind_(kind), mean_(mean) {
        if (!(mean > 0.0) || !std::isfinite(mean)) {
            throw ValueError("packet mean must be positive and finite, got " + std::to_string(mean));
        }
    }

    static DistributionSpec exponential(double mean) { return {PacketLaw::Exponential, mean}; }
    static DistributionSpec deterministic(double mean) { return {PacketLaw::Deterministic, mean}; }
    static DistributionSpec uniform(double mean) { return {PacketLaw::Uniform, mean}; }

    PacketLaw kind() const noexcept { return kind_; }
    double mean() const noexcept { return mean_; }

    /// Upper end of the support; +inf for the exponential law.
    double support_max() const noexcept {
        switch (kind_) {
            case PacketLaw::Exponential: return std::numeric_limits<double>::infinity();
            case PacketLaw::Deterministic: return mean_;
            case PacketLaw::Uniform: return 2.0 * mean_;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;

private:
    PacketLaw kind_;
    double mean_;
};

/// Canonical text form, e.g. "exp:mean=1.5". Parses back to an equal spec.
inline std::string to_string(const DistributionSpec& spec) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), spec.mean());
    return std::string(law_tag(spec.kind())) + ":mean=" + std::string(buf, res.ptr);
}

template <class Rng>
concept UniformSource = requires(Rng& rng) {
    { rng.uniform() } -> std::convertible_to<double>;
};

/// One draw from the packet law. Always strictly positive.
template <UniformSource Rng>
double sample(const DistributionSpec& spec, Rng& rng) {
    switch (spec.kind()) {
        case PacketLaw::Exponential: return sample_exponential(1.0 / spec.mean(), rng);
        case PacketLaw::Deterministic: return spec.mean();
        case PacketLaw::Uniform: return 2.0 * spec.mean() * rng.uniform();
    }
    return spec.mean();
}

struct Moments {
    double mean;
    double second_moment;

    double variance() const noexcept { return second_moment - mean * mean; }
};

inline Moments moments(const DistributionSpec& spec) noexcept {
    const double m = spec.mean();
    switch (spec.kind()) {
        case PacketLaw::Exponential: return {m, 2.0 * m * m};
        case PacketLaw::Deterministic: return {m, m * m};
        case PacketLaw::Uniform: return {m, 4.0 * m * m / 3.0};
    }
    return {m, m * m};
}

/// Moment generating function E[exp(rX)].
/// Throws DomainError for the exponential law when r >= 1/mean.
inline double mgf(const DistributionSpec& spec, double r) {
    const double m = spec.mean();
    switch (spec.kind()) {
        case PacketLaw::Exponential:
            if (r * m >= 1.0) {
                throw DomainError("exponential MGF diverges for r >= 1/mean (r=" + std::to_string(r) + ")");
            }
            return 1.0 / (1.0 - r * m);
        case PacketLaw::Deterministic:
            return std::exp(r * m);
        case PacketLaw::Uniform: {
            // (e^y - 1)/y with y = 2X̄r; removable singularity at r = 0.
            const double y = 2.0 * m * r;
            if (std::abs(r) < 1e-8) {
                return 1.0 + y / 2.0 + y * y / 6.0 + y * y * y / 24.0;
            }
            return std::expm1(y) / y;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline double cdf(const DistributionSpec& spec, double x) noexcept {
    const double m = spec.mean();
    if (x < 0.0) return 0.0;
    switch (spec.kind()) {
        case PacketLaw::Exponential: return -std::expm1(-x / m);
        case PacketLaw::Deterministic: return x >= m ? 1.0 : 0.0;
        case PacketLaw::Uniform: return x >= 2.0 * m ? 1.0 : x / (2.0 * m);
    }
    return 0.0;
}

/// ∫_a^∞ exp(-beta x) dF_X(x) for beta > 0, a >= 0.
inline double discounted_tail(const DistributionSpec& spec, double beta, double a) noexcept {
    const double m = spec.mean();
    switch (spec.kind()) {
        case PacketLaw::Exponential: {
            const double k = beta + 1.0 / m;
            return std::exp(-k * a) / (m * k);
        }
        case PacketLaw::Deterministic:
            return a <= m ? std::exp(-beta * m) : 0.0;
        case PacketLaw::Uniform: {
            const double hi = 2.0 * m;
            if (a >= hi) return 0.0;
            return (std::exp(-beta * a) - std::exp(-beta * hi)) / (hi * beta);
        }
    }
    return 0.0;
}

}  // namespace hsc
