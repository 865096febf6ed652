#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ledlink/bits.hpp"

namespace ledlink {

enum class Scheme { ook, bfsk, manchester, ask };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::ook: return "ook";
        case Scheme::bfsk: return "bfsk";
        case Scheme::manchester: return "manchester";
        case Scheme::ask: return "ask";
    }
    return "?";
}

inline Scheme scheme_from_name(const std::string& s) {
    if (s == "ook") return Scheme::ook;
    if (s == "bfsk") return Scheme::bfsk;
    if (s == "manchester") return Scheme::manchester;
    if (s == "ask") return Scheme::ask;
    throw std::invalid_argument("unknown scheme: " + s);
}

struct ModulationParams {
    double t_on_us = 0;    // ON symbol duration
    double t_off_us = 0;   // OFF symbol duration (B-FSK: the shorter ON pulse)
    double t_d_us = 0;     // inter-symbol all-OFF gap (B-FSK, ASK)
    double t_all_us = 0;   // multi-LED symbol hold (ASK)
    unsigned n_leds = 1;
};

struct LedEvent {
    uint64_t t_us = 0;
    uint32_t led = 0;
    bool on = false;
};

struct LedTimeline {
    std::vector<LedEvent> events;  // sorted by time, no redundant writes
    uint64_t total_duration_us = 0;
    uint32_t n_leds = 1;
};

// Accumulates events, dropping writes that do not change a LED's state.
// All LEDs start OFF and are forced OFF at finish().
class TimelineBuilder {
  public:
    explicit TimelineBuilder(uint32_t n_leds) : state_(n_leds, false) {
        timeline_.n_leds = n_leds;
    }

    void set(double t_us, uint32_t led, bool on) {
        if (led >= state_.size()) throw std::out_of_range("TimelineBuilder: led index");
        if (state_[led] == on) return;
        state_[led] = on;
        timeline_.events.push_back({quantize(t_us), led, on});
    }

    LedTimeline finish(double duration_us) {
        for (uint32_t i = 0; i < state_.size(); ++i)
            if (state_[i]) set(duration_us, i, false);
        timeline_.total_duration_us = quantize(duration_us);
        return std::move(timeline_);
    }

    static uint64_t quantize(double t_us) {
        if (t_us < 0) throw std::invalid_argument("negative timestamp");
        return static_cast<uint64_t>(std::llround(t_us));
    }

  private:
    std::vector<bool> state_;
    LedTimeline timeline_;
};

// OOK, single LED: 0 -> OFF for t_off, 1 -> ON for t_on; bits abut.
inline LedTimeline modulate_ook(const Bits& bits, const ModulationParams& p,
                                uint32_t led = 0, uint32_t n_leds = 1) {
    if (p.t_on_us <= 0 || p.t_off_us <= 0)
        throw std::invalid_argument("modulate_ook: durations must be positive");
    TimelineBuilder tb(n_leds);
    double t = 0;
    for (uint8_t b : bits) {
        tb.set(t, led, b != 0);
        t += b ? p.t_on_us : p.t_off_us;
    }
    return tb.finish(t);
}

// B-FSK, single LED: ON pulse of t_off encodes 0, ON pulse of t_on encodes 1,
// followed by an OFF gap of t_d after every bit.
inline LedTimeline modulate_bfsk(const Bits& bits, const ModulationParams& p,
                                 uint32_t led = 0) {
    if (p.t_on_us <= 0 || p.t_off_us <= 0 || p.t_d_us <= 0)
        throw std::invalid_argument("modulate_bfsk: durations must be positive");
    if (p.t_on_us == p.t_off_us)
        throw std::invalid_argument("modulate_bfsk: t_on and t_off must differ");
    TimelineBuilder tb(1);
    double t = 0;
    for (uint8_t b : bits) {
        tb.set(t, led, true);
        t += b ? p.t_on_us : p.t_off_us;
        tb.set(t, led, false);
        t += p.t_d_us;
    }
    return tb.finish(t);
}

// Manchester, single LED: 0 -> ON then OFF, 1 -> OFF then ON; equal half cells.
inline LedTimeline modulate_manchester(const Bits& bits, const ModulationParams& p,
                                       uint32_t led = 0) {
    if (p.t_on_us <= 0) throw std::invalid_argument("modulate_manchester: durations must be positive");
    if (p.t_on_us != p.t_off_us)
        throw std::invalid_argument("modulate_manchester: half cells must be equal");
    TimelineBuilder tb(1);
    double t = 0;
    for (uint8_t b : bits) {
        tb.set(t, led, b == 0);
        t += p.t_on_us;
        tb.set(t, led, b != 0);
        t += p.t_off_us;
    }
    return tb.finish(t);
}

// ASK over n LEDs: groups of n bits form one symbol; bit i drives LED i,
// held for t_all; all LEDs OFF for t_d between symbols. t_d may be zero.
inline LedTimeline modulate_ask_multi(const Bits& bits, const ModulationParams& p) {
    if (p.n_leds < 2) throw std::invalid_argument("modulate_ask_multi: needs n_leds >= 2");
    if (p.t_all_us <= 0 || p.t_d_us < 0)
        throw std::invalid_argument("modulate_ask_multi: invalid durations");
    if (bits.size() % p.n_leds != 0)
        throw std::invalid_argument("modulate_ask_multi: bit count not a multiple of n_leds");
    TimelineBuilder tb(p.n_leds);
    double t = 0;
    for (size_t g = 0; g < bits.size(); g += p.n_leds) {
        for (uint32_t i = 0; i < p.n_leds; ++i)
            tb.set(t, i, bits[g + i] != 0);
        t += p.t_all_us;
        // With no gap the next symbol's writes change state directly; an
        // explicit OFF here would put two same-LED transitions on one instant.
        if (p.t_d_us > 0) {
            for (uint32_t i = 0; i < p.n_leds; ++i)
                tb.set(t, i, false);
            t += p.t_d_us;
        }
    }
    return tb.finish(t);
}

inline LedTimeline modulate(Scheme s, const Bits& bits, const ModulationParams& p) {
    switch (s) {
        case Scheme::ook: return modulate_ook(bits, p);
        case Scheme::bfsk: return modulate_bfsk(bits, p);
        case Scheme::manchester: return modulate_manchester(bits, p);
        case Scheme::ask: return modulate_ask_multi(bits, p);
    }
    throw std::invalid_argument("modulate: unknown scheme");
}

// Theoretical throughput in bit/s for the given scheme and timing.
inline double max_bitrate(Scheme s, const ModulationParams& p) {
    switch (s) {
        case Scheme::ook:
            if (p.t_on_us == p.t_off_us) return 1e6 / std::max(p.t_on_us, p.t_off_us);
            return 1e6 / (0.5 * (p.t_on_us + p.t_off_us));
        case Scheme::manchester:
            return 0.5 * max_bitrate(Scheme::ook, p);
        case Scheme::bfsk:
            if (p.t_on_us == p.t_off_us)
                throw std::invalid_argument("max_bitrate: bfsk needs t_on != t_off");
            return 1e6 / (0.5 * (p.t_on_us + p.t_off_us) + p.t_d_us);
        case Scheme::ask:
            return p.n_leds * 1e6 / (p.t_all_us + p.t_d_us);
    }
    throw std::invalid_argument("max_bitrate: unknown scheme");
}

// --- timeline CSV trace: "timestamp_us,led,state" ---

inline void write_timeline_csv(std::ostream& os, const LedTimeline& t) {
    os << "timestamp_us,led,state\n";
    for (const auto& e : t.events)
        os << e.t_us << ',' << e.led << ',' << (e.on ? 1 : 0) << '\n';
}

inline void write_timeline_csv(const std::string& path, const LedTimeline& t) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_timeline_csv(os, t);
}

inline LedTimeline read_timeline_csv(std::istream& is) {
    LedTimeline t;
    std::string line;
    if (!std::getline(is, line) || line.rfind("timestamp_us", 0) != 0)
        throw std::runtime_error("timeline CSV: missing header");
    uint32_t max_led = 0;
    uint64_t max_t = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        uint64_t ts;
        uint32_t led;
        int state;
        char c1, c2;
        if (!(ls >> ts >> c1 >> led >> c2 >> state) || c1 != ',' || c2 != ',')
            throw std::runtime_error("timeline CSV: bad row: " + line);
        t.events.push_back({ts, led, state != 0});
        max_led = std::max(max_led, led);
        max_t = std::max(max_t, ts);
    }
    t.n_leds = t.events.empty() ? 1 : max_led + 1;
    t.total_duration_us = max_t;
    return t;
}

inline LedTimeline read_timeline_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_timeline_csv(is);
}

}  // namespace ledlink
