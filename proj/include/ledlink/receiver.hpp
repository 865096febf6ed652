#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ledlink/bits.hpp"
#include "ledlink/framing.hpp"
#include "ledlink/modulation.hpp"
#include "ledlink/optical_channel.hpp"

namespace ledlink {

// ---------------------------------------------------------------------------
// Savitzky-Golay smoothing
// ---------------------------------------------------------------------------

namespace detail {

// Convolution weights for the fitted value at the window center:
// first row of (A^T A)^{-1} A^T with A_{j,k} = j^k, j in [-h, h].
inline std::vector<double> savgol_weights(int half, int order) {
    const int m = std::min(order, 2 * half);
    const int w = 2 * half + 1;
    // Moment matrix G_{k,l} = sum_j j^(k+l)
    std::vector<long double> G((m + 1) * (m + 1), 0.0L);
    for (int j = -half; j <= half; ++j) {
        long double pw = 1.0L;
        std::vector<long double> p(2 * m + 1);
        for (int k = 0; k <= 2 * m; ++k) { p[k] = pw; pw *= j; }
        for (int k = 0; k <= m; ++k)
            for (int l = 0; l <= m; ++l) G[k * (m + 1) + l] += p[k + l];
    }
    // Solve G z = e0 by Gaussian elimination with partial pivoting.
    std::vector<long double> z(m + 1, 0.0L);
    z[0] = 1.0L;
    std::vector<long double> a = G;
    for (int col = 0; col <= m; ++col) {
        int piv = col;
        for (int r = col + 1; r <= m; ++r)
            if (std::fabs((double)a[r * (m + 1) + col]) > std::fabs((double)a[piv * (m + 1) + col]))
                piv = r;
        if (piv != col) {
            for (int k = 0; k <= m; ++k) std::swap(a[col * (m + 1) + k], a[piv * (m + 1) + k]);
            std::swap(z[col], z[piv]);
        }
        long double d = a[col * (m + 1) + col];
        for (int r = col + 1; r <= m; ++r) {
            long double f = a[r * (m + 1) + col] / d;
            for (int k = col; k <= m; ++k) a[r * (m + 1) + k] -= f * a[col * (m + 1) + k];
            z[r] -= f * z[col];
        }
    }
    for (int col = m; col >= 0; --col) {
        for (int k = col + 1; k <= m; ++k) z[col] -= a[col * (m + 1) + k] * z[k];
        z[col] /= a[col * (m + 1) + col];
    }
    std::vector<double> c(w);
    for (int j = -half; j <= half; ++j) {
        long double v = 0.0L, pw = 1.0L;
        for (int k = 0; k <= m; ++k) { v += z[k] * pw; pw *= j; }
        c[j + half] = double(v);
    }
    return c;
}

inline double median_of(std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("median of empty range");
    size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
}

inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("percentile of empty range");
    double idx = q * double(v.size() - 1);
    size_t lo = size_t(idx);
    size_t hi = std::min(lo + 1, v.size() - 1);
    std::nth_element(v.begin(), v.begin() + lo, v.end());
    double vlo = v[lo];
    double vhi = vlo;
    if (hi != lo) vhi = *std::min_element(v.begin() + lo + 1, v.end());
    return vlo + (vhi - vlo) * (idx - double(lo));
}

}  // namespace detail

// Sliding least-squares polynomial smoother; edges shrink to the largest
// symmetric window that fits (fit order capped at window size - 1 there).
inline Waveform savgol_smooth(const Waveform& w, int window, int order) {
    if (window % 2 == 0 || window <= order || order < 1)
        throw std::invalid_argument("savgol_smooth: need odd window > order >= 1");
    if (size_t(window) > w.samples.size())
        throw std::invalid_argument("savgol_smooth: window exceeds sample count");
    const int H = (window - 1) / 2;
    const size_t n = w.samples.size();
    std::vector<std::vector<double>> coeff(H + 1);
    for (int h = 0; h <= H; ++h) coeff[h] = detail::savgol_weights(h, order);

    Waveform out = w;
    for (size_t i = 0; i < n; ++i) {
        int h = int(std::min<size_t>({size_t(H), i, n - 1 - i}));
        const auto& c = coeff[h];
        double acc = 0;
        const double* x = w.samples.data() + (i - h);
        for (int j = 0; j < 2 * h + 1; ++j) acc += c[j] * x[j];
        out.samples[i] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

struct Calibration {
    double bit_period_us = 0;   // logical symbol duration (B-FSK: the 0/1
                                // pulse-duration decision boundary)
    double level_off_mv = 0;
    double level_on_mv = 0;
    double start_offset_us = 0;  // time of the first payload symbol
    double hold_us = 0;          // ASK: lit portion of the symbol (0 = whole)
};

namespace detail {

// Mid-level crossing times of a thresholded signal, with hysteresis.
inline std::vector<double> find_transitions(const Waveform& w, double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double band = 0.15 * (hi - lo);
    const double dt_us = 1e6 / w.sample_rate;
    std::vector<double> out;
    int state = w.samples.empty() ? 0 : (w.samples[0] > mid ? 1 : 0);
    for (size_t i = 1; i < w.samples.size(); ++i) {
        double prev = w.samples[i - 1], cur = w.samples[i];
        if (state == 0 && cur > mid + band) {
            double frac = (mid - prev) / (cur - prev);
            out.push_back((double(i - 1) + std::clamp(frac, 0.0, 1.0)) * dt_us);
            state = 1;
        } else if (state == 1 && cur < mid - band) {
            double frac = (prev - mid) / (prev - cur);
            out.push_back((double(i - 1) + std::clamp(frac, 0.0, 1.0)) * dt_us);
            state = 0;
        }
    }
    return out;
}

}  // namespace detail

// Locates the alternating 10101010 preamble, estimates the symbol period from
// the alternation spacing (refined by a least-squares fit over every edge in
// the capture), and reads the OFF/ON levels from the preamble span.
// Supports the schemes whose preamble alternates on a fixed grid: OOK and
// Manchester.
inline std::optional<Calibration> calibrate_preamble(const Waveform& w, Scheme scheme) {
    if (scheme != Scheme::ook && scheme != Scheme::manchester)
        throw std::invalid_argument("calibrate_preamble: only ook/manchester preambles");
    if (w.samples.size() < 16) return std::nullopt;

    // Light pre-smoothing so ADC noise cannot fake edges.
    Waveform sm = w;
    if (w.samples.size() >= 9) sm = savgol_smooth(w, 9, 2);

    double lo = detail::percentile(sm.samples, 0.10);
    double hi = detail::percentile(sm.samples, 0.90);
    if (hi - lo < 3.0) return std::nullopt;  // no modulated swing above noise

    auto tr = detail::find_transitions(sm, lo, hi);
    if (tr.size() < 8) return std::nullopt;

    // First run of 7 consistent intervals = the preamble alternation.
    size_t pre = tr.size();
    double period = 0;
    for (size_t i = 0; i + 7 < tr.size(); ++i) {
        std::vector<double> iv(7);
        for (int k = 0; k < 7; ++k) iv[k] = tr[i + k + 1] - tr[i + k];
        std::vector<double> tmp = iv;
        double med = detail::median_of(tmp);
        bool consistent = true;
        for (double d : iv)
            if (d < 0.6 * med || d > 1.4 * med) { consistent = false; break; }
        if (consistent) { pre = i; period = (tr[i + 7] - tr[i]) / 7.0; break; }
    }
    if (pre == tr.size() || period <= 0) return std::nullopt;

    // All edges sit on a grid of `base`; fit t = a + b*k over the capture to
    // pin the period well below one sample of error.
    const double base0 = scheme == Scheme::manchester ? period / 2.0 : period;
    const double t0 = tr[pre];
    // Fit t = a + b*k with a growing horizon: each pass refines the period
    // before edges far enough away to be misindexed by the current estimate
    // are allowed into the fit.
    double a = t0, b = base0;
    const double edge_span = tr.back() - t0;
    for (double kmax = 8.0;; kmax *= 2.0) {
        double sk = 0, skk = 0, st = 0, skt = 0;
        size_t cnt = 0;
        for (size_t i = pre; i < tr.size(); ++i) {
            double k = std::round((tr[i] - a) / b);
            if (k < 0 || k > kmax) continue;
            double resid = tr[i] - (a + k * b);
            if (std::fabs(resid) > 0.25 * b) continue;
            sk += k; skk += k * k; st += tr[i]; skt += k * tr[i];
            ++cnt;
        }
        if (cnt < 2) return std::nullopt;
        double denom = double(cnt) * skk - sk * sk;
        if (std::fabs(denom) < 1e-12) return std::nullopt;
        double nb = (double(cnt) * skt - sk * st) / denom;
        if (nb <= 0) return std::nullopt;
        a = (st - nb * sk) / double(cnt);
        b = nb;
        if (kmax >= edge_span / b) break;
    }

    Calibration cal;
    double pre_start;
    if (scheme == Scheme::manchester) {
        cal.bit_period_us = 2.0 * b;
        pre_start = a - b;  // first edge is the mid-cell of preamble bit 1
    } else {
        cal.bit_period_us = b;
        pre_start = a;
    }
    cal.start_offset_us = pre_start + 8.0 * cal.bit_period_us;

    // Levels from the raw samples inside the preamble span.
    const double dt_us = 1e6 / w.sample_rate;
    size_t i0 = size_t(std::max(0.0, pre_start / dt_us));
    size_t i1 = std::min(w.samples.size(), size_t((pre_start + 8.0 * cal.bit_period_us) / dt_us));
    if (i1 <= i0 + 4) return std::nullopt;
    std::vector<double> span(w.samples.begin() + i0, w.samples.begin() + i1);
    cal.level_off_mv = detail::percentile(span, 0.10);
    cal.level_on_mv = detail::percentile(span, 0.90);
    if (cal.level_on_mv <= cal.level_off_mv) return std::nullopt;
    return cal;
}

// ---------------------------------------------------------------------------
// Demodulation
// ---------------------------------------------------------------------------

struct DemodResult {
    Bits bits;
    bool truncated = false;  // last cell ran past the end of the capture
};

struct SubNyquistError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline int default_savgol_window(double samples_per_bit, size_t n_samples) {
    int w = int(std::lround(samples_per_bit / 4.0));
    if (w % 2 == 0) ++w;
    w = std::clamp(w, 5, 101);
    if (size_t(w) > n_samples) {
        w = int(n_samples);
        if (w % 2 == 0) --w;
    }
    return w;
}

// Median of samples in [t0, t1) microseconds; empty range -> nullopt.
inline std::optional<double> window_median(const Waveform& w, double t0, double t1) {
    const double dt_us = 1e6 / w.sample_rate;
    size_t i0 = size_t(std::max(0.0, std::ceil(t0 / dt_us)));
    size_t i1 = std::min(w.samples.size(), size_t(std::max(0.0, std::ceil(t1 / dt_us))));
    if (i1 <= i0) return std::nullopt;
    std::vector<double> win(w.samples.begin() + i0, w.samples.begin() + i1);
    return median_of(win);
}

}  // namespace detail

// Symbol decisions use the median of the central 50% of each cell, on the
// Savitzky-Golay smoothed waveform.
inline DemodResult demod_sensor(const Waveform& w, Scheme scheme, const Calibration& cal,
                                int n_levels = 2) {
    if (cal.bit_period_us <= 0 || cal.level_on_mv <= cal.level_off_mv)
        throw std::invalid_argument("demod_sensor: invalid calibration");
    if (n_levels < 2) throw std::invalid_argument("demod_sensor: n_levels must be >= 2");
    if (scheme != Scheme::ask && n_levels != 2)
        throw std::invalid_argument("demod_sensor: n_levels > 2 is only meaningful for ask");

    const double rate = w.sample_rate;
    const double spb = cal.bit_period_us * rate / 1e6;
    Waveform sm = w;
    int win = detail::default_savgol_window(spb, w.samples.size());
    if (win >= 5) sm = savgol_smooth(w, win, 3);

    const double duration = w.duration_us();
    const double mid = 0.5 * (cal.level_off_mv + cal.level_on_mv);
    DemodResult res;

    if (scheme == Scheme::ook) {
        const double P = cal.bit_period_us;
        // Only the central decision window needs to fit: small clock-estimate
        // error must not drop the final cell.
        for (double c0 = cal.start_offset_us; c0 + 0.75 * P <= duration + 1e-9; c0 += P) {
            auto m = detail::window_median(sm, c0 + 0.25 * P, c0 + 0.75 * P);
            if (!m) { res.truncated = true; break; }
            res.bits.push_back(*m > mid ? 1 : 0);
        }
        if (cal.start_offset_us + (double(res.bits.size()) + 1) * P <= duration) res.truncated = true;
    } else if (scheme == Scheme::manchester) {
        const double P = cal.bit_period_us;
        const double Hh = P / 2.0;
        for (double c0 = cal.start_offset_us; c0 + Hh + 0.75 * Hh <= duration + 1e-9; c0 += P) {
            auto m1 = detail::window_median(sm, c0 + 0.25 * Hh, c0 + 0.75 * Hh);
            auto m2 = detail::window_median(sm, c0 + Hh + 0.25 * Hh, c0 + Hh + 0.75 * Hh);
            if (!m1 || !m2) { res.truncated = true; break; }
            res.bits.push_back(*m2 > *m1 ? 1 : 0);
        }
    } else if (scheme == Scheme::bfsk) {
        // Classify ON-pulse durations against the calibrated boundary.
        auto tr = detail::find_transitions(sm, cal.level_off_mv, cal.level_on_mv);
        double rise = -1;
        for (double t : tr) {
            if (t < cal.start_offset_us) continue;
            if (rise < 0) { rise = t; continue; }
            double dur = t - rise;
            res.bits.push_back(dur > cal.bit_period_us ? 1 : 0);
            rise = -1;
        }
        if (rise >= 0) res.truncated = true;  // pulse still open at capture end
    } else {  // ask: n_levels equally spaced amplitude levels
        if ((n_levels & (n_levels - 1)) != 0)
            throw std::invalid_argument("demod_sensor: ask n_levels must be a power of two");
        int bits_per_symbol = 0;
        for (int v = n_levels; v > 1; v >>= 1) ++bits_per_symbol;
        const double S = cal.bit_period_us;
        const double hold = cal.hold_us > 0 ? cal.hold_us : S;
        const double step = (cal.level_on_mv - cal.level_off_mv) / double(n_levels - 1);
        for (double c0 = cal.start_offset_us; c0 + 0.75 * hold <= duration + 1e-9; c0 += S) {
            auto m = detail::window_median(sm, c0 + 0.25 * hold, c0 + 0.75 * hold);
            if (!m) { res.truncated = true; break; }
            int k = int(std::lround((*m - cal.level_off_mv) / step));
            k = std::clamp(k, 0, n_levels - 1);
            for (int kb = bits_per_symbol - 1; kb >= 0; --kb)
                res.bits.push_back((k >> kb) & 1);
        }
    }
    return res;
}

// Majority vote over frames_per_bit camera frames per bit cell; per-LED bits
// are concatenated in LED-index order.  frames_per_bit must be >= 2.
inline Bits demod_camera(const FrameSeries& fs, int frames_per_bit,
                         std::vector<uint32_t> led_subset = {}) {
    if (frames_per_bit < 2)
        throw SubNyquistError("demod_camera: frames_per_bit < 2 would alias");
    if (led_subset.empty())
        for (uint32_t l = 0; l < fs.n_leds; ++l) led_subset.push_back(l);
    Bits out;
    size_t n_cells = fs.frames.size() / size_t(frames_per_bit);
    for (size_t c = 0; c < n_cells; ++c) {
        for (uint32_t led : led_subset) {
            if (led >= fs.n_leds) throw std::invalid_argument("demod_camera: led index");
            int on = 0;
            for (int k = 0; k < frames_per_bit; ++k)
                on += fs.frames[c * frames_per_bit + k][led];
            uint8_t bit;
            if (2 * on > frames_per_bit) bit = 1;
            else if (2 * on < frames_per_bit) bit = 0;
            else bit = fs.frames[c * frames_per_bit][led];  // tie: lean on the first frame
            out.push_back(bit);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stream decode + BER
// ---------------------------------------------------------------------------

struct DecodeReport {
    std::vector<Bits> payloads;
    size_t frames_ok = 0;
    size_t frames_crc_failed = 0;
    size_t frames_sync_failed = 0;  // preamble matches with too few bits left
    Bits raw_bits;

    std::string to_kv() const {
        std::ostringstream os;
        os << "frames_ok=" << frames_ok << '\n'
           << "frames_crc_failed=" << frames_crc_failed << '\n'
           << "frames_sync_failed=" << frames_sync_failed << '\n'
           << "raw_bit_count=" << raw_bits.size() << '\n';
        return os.str();
    }
};

inline DecodeReport decode_stream(const Bits& b) {
    DecodeReport rep;
    rep.raw_bits = b;
    const Bits pre = preamble_bits();
    size_t i = 0;
    while (i + kPreambleBits <= b.size()) {
        bool match = std::equal(pre.begin(), pre.end(), b.begin() + i);
        if (!match) { ++i; continue; }
        if (i + kFrameBits > b.size()) {
            ++rep.frames_sync_failed;
            break;
        }
        ParseResult r = parse_frame(b, i);
        if (r.ok()) {
            rep.payloads.push_back(r.frame.payload);
            ++rep.frames_ok;
            i += kFrameBits;
        } else {
            ++rep.frames_crc_failed;
            ++i;
        }
    }
    return rep;
}

struct BerReport {
    size_t bits_sent = 0;
    size_t bits_errored = 0;
    double ber = 0;

    std::string to_kv() const {
        std::ostringstream os;
        os << "bits_sent=" << bits_sent << '\n'
           << "bits_errored=" << bits_errored << '\n'
           << "ber=" << ber << '\n';
        return os.str();
    }
};

// Hamming distance / sent length; missing tail bits count as errors.
inline BerReport compute_ber(const Bits& sent, const Bits& received) {
    BerReport r;
    r.bits_sent = sent.size();
    size_t common = std::min(sent.size(), received.size());
    for (size_t i = 0; i < common; ++i)
        if (sent[i] != received[i]) ++r.bits_errored;
    if (received.size() < sent.size()) r.bits_errored += sent.size() - received.size();
    r.ber = sent.empty() ? 0.0 : double(r.bits_errored) / double(sent.size());
    return r;
}

}  // namespace ledlink
