#pragma once

#include <concepts>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsc/distributions.hpp"
#include "hsc/errors.hpp"
#include "hsc/rng.hpp"

namespace hsc {

/// Packet i arrives carrying `energy` (X_i); the next packet follows after `gap` (A_i).
/// Event 0 is the packet delivered at t = 0.
struct Event {
    double energy;
    double gap;
};

/// Yields events until exhausted. An empty optional means no further arrivals ever.
template <class S>
concept EventSource = requires(S& source) {
    { source.next() } -> std::same_as<std::optional<Event>>;
};

/// Poisson arrivals with i.i.d. packet sizes. Fully determined by (lambda, packet, rng state).
class PoissonEventSource {
public:
    PoissonEventSource(double lambda, DistributionSpec packet, Xoshiro256pp rng)
        : lambda_(lambda), packet_(packet), rng_(rng) {
        if (!(lambda > 0.0)) throw ValueError("arrival rate must be positive");
    }

    std::optional<Event> next() {
        const double energy = sample(packet_, rng_);
        const double gap = sample_exponential(lambda_, rng_);
        return Event{energy, gap};
    }

private:
    double lambda_;
    DistributionSpec packet_;
    Xoshiro256pp rng_;
};

/// Fixed event list for exact-value tests.
class ScriptedEventSource {
public:
    enum class WhenExhausted { Stop, Repeat };

    explicit ScriptedEventSource(std::vector<Event> events, WhenExhausted mode = WhenExhausted::Stop)
        : events_(std::move(events)), mode_(mode) {
        for (std::size_t i = 0; i < events_.size(); ++i) {
            if (!(events_[i].energy > 0.0) || !(events_[i].gap > 0.0)) {
                throw ValueError("scripted event " + std::to_string(i) + " must have positive energy and gap");
            }
        }
        if (mode_ == WhenExhausted::Repeat && events_.empty()) {
            throw ValueError("cannot repeat an empty event script");
        }
    }

    std::optional<Event> next() {
        if (pos_ == events_.size()) {
            if (mode_ == WhenExhausted::Stop) return std::nullopt;
            pos_ = 0;
        }
        return events_[pos_++];
    }

private:
    std::vector<Event> events_;
    WhenExhausted mode_;
    std::size_t pos_ = 0;
};

static_assert(EventSource<PoissonEventSource>);
static_assert(EventSource<ScriptedEventSource>);

}  // namespace hsc
