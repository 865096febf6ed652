#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ledlink/bits.hpp"
#include "ledlink/modulation.hpp"

namespace ledlink {

// Per-device timing and amplitude envelope measured at the photodiode.
struct RouterProfile {
    std::string name;
    uint32_t n_leds = 1;
    double min_on_us = 0;      // shortest realizable LED-ON interval
    double min_cycle_us = 0;   // shortest realizable blink cycle
    double on_level_mv = 0;    // photodiode level with one LED lit
    double ambient_mv = 0;     // photodiode level with all LEDs off
    double per_led_step_mv = 0;  // level increment per additional lit LED
    bool inverted_polarity = false;  // some LEDs treat 0 as ON
    std::string led_name_prefix = "led";

    std::string led_path(uint32_t led) const {
        return "/sys/class/leds/" + led_name_prefix + std::to_string(led) + "/brightness";
    }
};

namespace profiles {

inline RouterProfile r1() {
    return {"R1", 7, 120.0, 700.0, 14.0, 4.0, 10.0, false, "led"};
}

inline RouterProfile r2() {
    return {"R2", 8, 190.0, 290.0, 30.0, 6.0, 24.0, false, "led"};
}

// R1 with all seven LEDs switched together; faster minimum cycle.
inline RouterProfile r1_multi() {
    RouterProfile p = r1();
    p.name = "R1_MULTI";
    p.min_cycle_us = 240.0;
    return p;
}

inline RouterProfile by_name(const std::string& name) {
    if (name == "R1" || name == "r1") return r1();
    if (name == "R2" || name == "r2") return r2();
    if (name == "R1_MULTI" || name == "r1_multi") return r1_multi();
    throw std::invalid_argument("unknown router profile: " + name);
}

}  // namespace profiles

struct TimingViolation {
    enum class Kind { on_too_short, cycle_too_short };
    Kind kind;
    uint32_t led;
    uint64_t t_us;       // start of the offending interval
    double actual_us;
    double limit_us;
};

struct ValidationReport {
    std::vector<TimingViolation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const {
        std::ostringstream os;
        for (const auto& v : violations)
            os << (v.kind == TimingViolation::Kind::on_too_short ? "on_too_short" : "cycle_too_short")
               << " led=" << v.led << " t=" << v.t_us << "us actual=" << v.actual_us
               << "us limit=" << v.limit_us << "us\n";
        return os.str();
    }
};

// Checks every ON interval against min_on_us and every interval between
// consecutive state changes of the same LED against min_cycle_us.
inline ValidationReport validate_timeline(const LedTimeline& t, const RouterProfile& p) {
    if (t.n_leds > p.n_leds)
        throw std::invalid_argument("validate_timeline: timeline uses more LEDs than profile has");
    ValidationReport rep;
    std::vector<int64_t> last_change(t.n_leds, -1);
    std::vector<int64_t> on_since(t.n_leds, -1);
    auto check_cycle = [&](uint32_t led, uint64_t now) {
        if (last_change[led] >= 0) {
            double dt = double(now) - double(last_change[led]);
            if (dt + 1e-9 < p.min_cycle_us)
                rep.violations.push_back({TimingViolation::Kind::cycle_too_short, led,
                                          uint64_t(last_change[led]), dt, p.min_cycle_us});
        }
        last_change[led] = int64_t(now);
    };
    for (const auto& e : t.events) {
        check_cycle(e.led, e.t_us);
        if (e.on) {
            on_since[e.led] = int64_t(e.t_us);
        } else if (on_since[e.led] >= 0) {
            double dt = double(e.t_us) - double(on_since[e.led]);
            if (dt + 1e-9 < p.min_on_us)
                rep.violations.push_back({TimingViolation::Kind::on_too_short, e.led,
                                          uint64_t(on_since[e.led]), dt, p.min_on_us});
            on_since[e.led] = -1;
        }
    }
    return rep;
}

// Direct transcription of the sysfs OOK loop: walk the data, set the LED
// per bit, sleep T, close (force OFF) at the end.  Equivalent to
// modulate_ook with t_on = t_off = T.
inline LedTimeline algorithm1_ook(uint32_t led_index, const Bits& data, double T_us) {
    if (T_us <= 0) throw std::invalid_argument("algorithm1_ook: T must be positive");
    TimelineBuilder tb(led_index + 1);
    double t = 0;
    size_t i = 0;
    while (i < data.size()) {
        if (data[i] == 0) tb.set(t, led_index, false);
        if (data[i] == 1) tb.set(t, led_index, true);
        ++i;
        t += T_us;
    }
    return tb.finish(t);
}

struct SysfsWrite {
    uint64_t t_us;
    std::string path;
    std::string value;
};

struct SysfsTrace {
    std::vector<SysfsWrite> writes;
};

// One brightness write per timeline event; refuses timelines the profile
// cannot realize.
inline SysfsTrace emit_trace(const LedTimeline& t, const RouterProfile& p) {
    ValidationReport rep = validate_timeline(t, p);
    if (!rep.ok())
        throw std::runtime_error("emit_trace: timeline violates profile limits:\n" + rep.to_string());
    SysfsTrace trace;
    trace.writes.reserve(t.events.size());
    for (const auto& e : t.events) {
        bool level = e.on != p.inverted_polarity;
        trace.writes.push_back({e.t_us, p.led_path(e.led), level ? "255" : "0"});
    }
    return trace;
}

// Rebuilds the timeline from a trace; inverse of emit_trace.
inline LedTimeline trace_to_timeline(const SysfsTrace& trace, const RouterProfile& p) {
    LedTimeline t;
    uint32_t max_led = 0;
    for (const auto& w : trace.writes) {
        const std::string needle = "/" + p.led_name_prefix;
        auto pos = w.path.rfind(needle);
        if (pos == std::string::npos)
            throw std::runtime_error("trace_to_timeline: unrecognized path " + w.path);
        auto digits = pos + needle.size();
        auto end = w.path.find('/', digits);
        uint32_t led = uint32_t(std::stoul(w.path.substr(digits, end - digits)));
        bool level = w.value != "0";
        bool on = level != p.inverted_polarity;
        t.events.push_back({w.t_us, led, on});
        max_led = std::max(max_led, led);
    }
    t.n_leds = trace.writes.empty() ? 1 : max_led + 1;
    t.total_duration_us = t.events.empty() ? 0 : t.events.back().t_us;
    return t;
}

// --- sysfs trace CSV: "timestamp_us,path,value" ---

inline void write_trace_csv(std::ostream& os, const SysfsTrace& t) {
    os << "timestamp_us,path,value\n";
    for (const auto& w : t.writes) os << w.t_us << ',' << w.path << ',' << w.value << '\n';
}

inline void write_trace_csv(const std::string& path, const SysfsTrace& t) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_trace_csv(os, t);
}

inline SysfsTrace read_trace_csv(std::istream& is) {
    SysfsTrace t;
    std::string line;
    if (!std::getline(is, line) || line.rfind("timestamp_us", 0) != 0)
        throw std::runtime_error("trace CSV: missing header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = line.rfind(',');
        if (c1 == std::string::npos || c2 == c1)
            throw std::runtime_error("trace CSV: bad row: " + line);
        t.writes.push_back({std::stoull(line.substr(0, c1)),
                            line.substr(c1 + 1, c2 - c1 - 1), line.substr(c2 + 1)});
    }
    return t;
}

inline SysfsTrace read_trace_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_trace_csv(is);
}

}  // namespace ledlink
