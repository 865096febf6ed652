#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ledlink/modulation.hpp"
#include "ledlink/transmitter.hpp"

namespace ledlink {

inline constexpr double kAdcFullScaleMv = 100.0;  // spans every profile level

struct ChannelConfig {
    double sample_rate = 500000.0;  // samples per second
    double noise_sigma_mv = 1.0;
    double flicker_freq_hz = 0.0;
    double flicker_amp_mv = 0.0;
    double rise_tau_us = -1.0;  // < 0: use profile default min_on_us / 5
    int adc_bits = 16;          // in [8, 24]
    uint64_t rng_seed = 0;
};

struct Waveform {
    double sample_rate = 0;
    double start_time_us = 0;
    std::vector<double> samples;  // mV
    double duration_us() const { return 1e6 * double(samples.size()) / sample_rate; }
};

struct CameraConfig {
    double fps = 30.0;
    double shutter_fraction = 1.0;  // exposure window as fraction of frame period
    uint64_t rng_seed = 0;
};

struct FrameSeries {
    double fps = 0;
    uint32_t n_leds = 1;
    std::vector<std::vector<uint8_t>> frames;  // per frame: one 0/1 state per LED
};

struct UndersamplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Piecewise-constant lit-LED count over time, derived from the event list.
struct LitCountSteps {
    std::vector<uint64_t> t_us;  // step start times
    std::vector<int> count;

    static LitCountSteps from(const LedTimeline& tl) {
        LitCountSteps s;
        s.t_us.push_back(0);
        s.count.push_back(0);
        std::vector<bool> state(tl.n_leds, false);
        int lit = 0;
        size_t i = 0;
        while (i < tl.events.size()) {
            uint64_t t = tl.events[i].t_us;
            while (i < tl.events.size() && tl.events[i].t_us == t) {
                const auto& e = tl.events[i];
                if (state[e.led] != e.on) {
                    state[e.led] = e.on;
                    lit += e.on ? 1 : -1;
                }
                ++i;
            }
            if (t == s.t_us.back()) s.count.back() = lit;
            else { s.t_us.push_back(t); s.count.push_back(lit); }
        }
        return s;
    }

    // count at time t (µs); steps are right-open intervals
    int at(double t, size_t& hint) const {
        while (hint + 1 < t_us.size() && double(t_us[hint + 1]) <= t) ++hint;
        return count[hint];
    }
};

}  // namespace detail

// Photodiode model: ideal level = ambient + lit_count * per_led_step, passed
// through a first-order low-pass, plus ambient flicker sinusoid, plus
// Gaussian noise, quantized by the ADC.  Deterministic per seed.
inline Waveform render_waveform(const LedTimeline& tl, const RouterProfile& p,
                                const ChannelConfig& c) {
    if (c.sample_rate <= 0) throw std::invalid_argument("render_waveform: bad sample rate");
    if (c.adc_bits < 8 || c.adc_bits > 24)
        throw std::invalid_argument("render_waveform: adc_bits must be in [8,24]");
    if (c.sample_rate * p.min_on_us / 1e6 < 4.0)
        throw UndersamplingError("render_waveform: fewer than 4 samples per minimum ON interval");

    const double dt_us = 1e6 / c.sample_rate;
    const double tau = c.rise_tau_us < 0 ? p.min_on_us / 5.0 : c.rise_tau_us;
    const double alpha = tau > 0 ? 1.0 - std::exp(-dt_us / tau) : 1.0;
    const size_t n = size_t(std::ceil(double(tl.total_duration_us) / 1e6 * c.sample_rate));

    auto steps = detail::LitCountSteps::from(tl);
    std::mt19937_64 gen(c.rng_seed);
    std::normal_distribution<double> noise(0.0, c.noise_sigma_mv);
    const double q = kAdcFullScaleMv / (double((1u << c.adc_bits) - 1u));

    Waveform w;
    w.sample_rate = c.sample_rate;
    w.samples.resize(n);
    size_t hint = 0;
    double y = p.ambient_mv;  // filter state starts at the idle level
    for (size_t i = 0; i < n; ++i) {
        double t = double(i) * dt_us;
        double ideal = p.ambient_mv + steps.at(t, hint) * p.per_led_step_mv;
        y += alpha * (ideal - y);
        double v = y;
        if (c.flicker_amp_mv != 0)
            v += c.flicker_amp_mv * std::sin(2.0 * M_PI * c.flicker_freq_hz * t * 1e-6);
        if (c.noise_sigma_mv > 0) v += noise(gen);
        v = std::clamp(v, 0.0, kAdcFullScaleMv);
        w.samples[i] = std::round(v / q) * q;
    }
    return w;
}

// Camera model: per video frame, each LED reports ON iff it was lit for more
// than half of the exposure window.  Cameras resolve LEDs spatially.
inline FrameSeries capture_camera(const LedTimeline& tl, const RouterProfile& p,
                                  const CameraConfig& cam) {
    if (cam.fps <= 0) throw std::invalid_argument("capture_camera: fps must be positive");
    if (cam.shutter_fraction <= 0 || cam.shutter_fraction > 1)
        throw std::invalid_argument("capture_camera: shutter_fraction must be in (0,1]");
    (void)p;
    const double period_us = 1e6 / cam.fps;
    const double window_us = cam.shutter_fraction * period_us;

    // Per-LED on intervals.
    std::vector<std::vector<std::pair<double, double>>> on_ivs(tl.n_leds);
    {
        std::vector<double> on_start(tl.n_leds, -1);
        for (const auto& e : tl.events) {
            if (e.on) on_start[e.led] = double(e.t_us);
            else if (on_start[e.led] >= 0) {
                on_ivs[e.led].push_back({on_start[e.led], double(e.t_us)});
                on_start[e.led] = -1;
            }
        }
        for (uint32_t l = 0; l < tl.n_leds; ++l)
            if (on_start[l] >= 0) on_ivs[l].push_back({on_start[l], double(tl.total_duration_us)});
    }

    FrameSeries fs;
    fs.fps = cam.fps;
    fs.n_leds = tl.n_leds;
    std::vector<size_t> cursor(tl.n_leds, 0);
    for (size_t fi = 0;; ++fi) {
        double t0 = double(fi) * period_us;
        if (t0 >= double(tl.total_duration_us) - 1e-6) break;
        double t1 = t0 + window_us;
        std::vector<uint8_t> frame(tl.n_leds, 0);
        for (uint32_t l = 0; l < tl.n_leds; ++l) {
            while (cursor[l] < on_ivs[l].size() && on_ivs[l][cursor[l]].second <= t0) ++cursor[l];
            double on_time = 0;
            for (size_t k = cursor[l]; k < on_ivs[l].size() && on_ivs[l][k].first < t1; ++k)
                on_time += std::max(0.0, std::min(t1, on_ivs[l][k].second) -
                                             std::max(t0, on_ivs[l][k].first));
            frame[l] = on_time > window_us / 2 ? 1 : 0;
        }
        fs.frames.push_back(std::move(frame));
    }
    return fs;
}

// --- waveform files ---

// Text: one-line header "sample_rate_hz=<int>", then one sample (mV) per line.
inline void write_waveform_text(std::ostream& os, const Waveform& w) {
    os << "sample_rate_hz=" << int64_t(std::llround(w.sample_rate)) << '\n';
    os.precision(9);
    for (double s : w.samples) os << s << '\n';
}

inline void write_waveform_text(const std::string& path, const Waveform& w) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_waveform_text(os, w);
}

inline Waveform read_waveform_text(std::istream& is) {
    Waveform w;
    std::string line;
    if (!std::getline(is, line) || line.rfind("sample_rate_hz=", 0) != 0)
        throw std::runtime_error("waveform: missing sample_rate_hz header");
    w.sample_rate = std::stod(line.substr(line.find('=') + 1));
    while (std::getline(is, line))
        if (!line.empty()) w.samples.push_back(std::stod(line));
    return w;
}

inline Waveform read_waveform_text(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_waveform_text(is);
}

// Binary: header line as above, then little-endian 32-bit floats.
inline void write_waveform_binary(const std::string& path, const Waveform& w) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "sample_rate_hz=" << int64_t(std::llround(w.sample_rate)) << '\n';
    for (double s : w.samples) {
        float f = float(s);
        os.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
}

inline Waveform read_waveform_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("sample_rate_hz=", 0) != 0)
        throw std::runtime_error("waveform: missing sample_rate_hz header");
    Waveform w;
    w.sample_rate = std::stod(line.substr(line.find('=') + 1));
    float f;
    while (is.read(reinterpret_cast<char*>(&f), sizeof(f))) w.samples.push_back(double(f));
    return w;
}

// --- frame series CSV: "frame_index,led,state" ---

inline void write_frames_csv(std::ostream& os, const FrameSeries& fs) {
    os << "frame_index,led,state\n";
    for (size_t i = 0; i < fs.frames.size(); ++i)
        for (uint32_t l = 0; l < fs.n_leds; ++l)
            os << i << ',' << l << ',' << int(fs.frames[i][l]) << '\n';
}

inline void write_frames_csv(const std::string& path, const FrameSeries& fs) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_frames_csv(os, fs);
}

inline FrameSeries read_frames_csv(std::istream& is, double fps) {
    FrameSeries fs;
    fs.fps = fps;
    std::string line;
    if (!std::getline(is, line) || line.rfind("frame_index", 0) != 0)
        throw std::runtime_error("frame series CSV: missing header");
    uint32_t max_led = 0;
    std::vector<std::tuple<size_t, uint32_t, uint8_t>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        size_t fi;
        uint32_t led;
        int state;
        char c1, c2;
        if (!(ls >> fi >> c1 >> led >> c2 >> state) || c1 != ',' || c2 != ',')
            throw std::runtime_error("frame series CSV: bad row: " + line);
        rows.push_back({fi, led, uint8_t(state != 0)});
        max_led = std::max(max_led, led);
    }
    fs.n_leds = rows.empty() ? 1 : max_led + 1;
    size_t n_frames = 0;
    for (auto& [fi, led, st] : rows) n_frames = std::max(n_frames, fi + 1);
    fs.frames.assign(n_frames, std::vector<uint8_t>(fs.n_leds, 0));
    for (auto& [fi, led, st] : rows) fs.frames[fi][led] = st;
    return fs;
}

inline FrameSeries read_frames_csv(const std::string& path, double fps) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_frames_csv(is, fps);
}

}  // namespace ledlink
