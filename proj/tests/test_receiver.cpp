#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ledlink/receiver.hpp"
#include "ledlink/rng.hpp"
#include "ledlink/transmitter.hpp"

using namespace ledlink;

namespace {

// Brute-force oracle: for every output index, assemble the (shrunken
// symmetric) window, solve the least-squares polynomial fit from the normal
// equations, and evaluate at the window center.
std::vector<double> savgol_oracle(const std::vector<double>& x, int window, int order) {
    const int H = (window - 1) / 2;
    const int n = int(x.size());
    std::vector<double> out(x.size());
    for (int i = 0; i < n; ++i) {
        int h = std::min({H, i, n - 1 - i});
        int m = std::min(order, 2 * h);
        int rows = 2 * h + 1;
        // Normal equations N b = r with N_{k,l} = sum j^(k+l), r_k = sum j^k x_j
        std::vector<std::vector<double>> N(m + 1, std::vector<double>(m + 2, 0.0));
        for (int j = -h; j <= h; ++j) {
            std::vector<double> p(2 * m + 1, 1.0);
            for (int k = 1; k <= 2 * m; ++k) p[k] = p[k - 1] * j;
            for (int k = 0; k <= m; ++k) {
                for (int l = 0; l <= m; ++l) N[k][l] += p[k + l];
                N[k][m + 1] += p[k] * x[i + j];
            }
        }
        // Gaussian elimination with partial pivoting on the augmented matrix.
        for (int col = 0; col <= m; ++col) {
            int piv = col;
            for (int r = col + 1; r <= m; ++r)
                if (std::fabs(N[r][col]) > std::fabs(N[piv][col])) piv = r;
            std::swap(N[col], N[piv]);
            for (int r = 0; r <= m; ++r) {
                if (r == col) continue;
                double f = N[r][col] / N[col][col];
                for (int k = col; k <= m + 1; ++k) N[r][k] -= f * N[col][k];
            }
        }
        out[i] = N[0][m + 1] / N[0][0];  // fitted value at j = 0
        (void)rows;
    }
    return out;
}

Waveform make_waveform(std::vector<double> samples, double rate = 500000) {
    Waveform w;
    w.sample_rate = rate;
    w.samples = std::move(samples);
    return w;
}

ChannelConfig clean_channel(double rate = 100000) {
    ChannelConfig c;
    c.sample_rate = rate;
    c.noise_sigma_mv = 0;
    c.adc_bits = 24;
    return c;
}

Calibration known_cal(double period_us, const RouterProfile& p, double level_on_delta,
                      double start = 0, double hold = 0) {
    Calibration c;
    c.bit_period_us = period_us;
    c.level_off_mv = p.ambient_mv;
    c.level_on_mv = p.ambient_mv + level_on_delta;
    c.start_offset_us = start;
    c.hold_us = hold;
    return c;
}

}  // namespace

TEST_CASE("savgol_smooth reproduces constants exactly") {
    Waveform w = make_waveform(std::vector<double>(200, 7.25));
    Waveform s = savgol_smooth(w, 11, 3);
    for (double v : s.samples) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(7.25, 1e-12));
}

TEST_CASE("savgol_smooth reproduces polynomials of degree <= order at interior points") {
    std::vector<double> x(300);
    for (int i = 0; i < 300; ++i) {
        double t = double(i);
        x[i] = 3.0 + 0.5 * t - 0.01 * t * t + 1e-4 * t * t * t;
    }
    Waveform s = savgol_smooth(make_waveform(x), 21, 3);
    for (int i = 10; i < 290; ++i)
        REQUIRE_THAT(s.samples[i], Catch::Matchers::WithinRel(x[i], 1e-9));
}

TEST_CASE("savgol_smooth matches the per-window least-squares oracle") {
    std::mt19937_64 gen(123);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 50 + trial * 17;
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i)
            x[i] = (i < n / 2 ? 4.0 : 14.0) + noise(gen);  // noisy step
        int window = 5 + 2 * (trial % 7);
        int order = 1 + trial % 3;
        if (window <= order) window = order + (order % 2 ? 2 : 1);
        if (window % 2 == 0) ++window;
        CAPTURE(trial, window, order);
        Waveform s = savgol_smooth(make_waveform(x), window, order);
        auto oracle = savgol_oracle(x, window, order);
        double max_diff = 0;
        for (int i = 0; i < n; ++i) max_diff = std::max(max_diff, std::fabs(s.samples[i] - oracle[i]));
        REQUIRE(max_diff < 1e-6);
    }
}

TEST_CASE("savgol_smooth is linear") {
    std::mt19937_64 gen(9);
    std::normal_distribution<double> noise(0.0, 2.0);
    std::vector<double> x(150), y(150), z(150);
    for (int i = 0; i < 150; ++i) {
        x[i] = noise(gen);
        y[i] = noise(gen);
        z[i] = 1.5 * x[i] - 2.25 * y[i];
    }
    Waveform sx = savgol_smooth(make_waveform(x), 11, 3);
    Waveform sy = savgol_smooth(make_waveform(y), 11, 3);
    Waveform sz = savgol_smooth(make_waveform(z), 11, 3);
    for (int i = 0; i < 150; ++i) {
        double expect = 1.5 * sx.samples[i] - 2.25 * sy.samples[i];
        REQUIRE_THAT(sz.samples[i], Catch::Matchers::WithinAbs(expect, 1e-9 * (1 + std::fabs(expect))));
    }
}

TEST_CASE("savgol_smooth parameter validation") {
    Waveform w = make_waveform(std::vector<double>(50, 1.0));
    CHECK_THROWS_AS(savgol_smooth(w, 10, 3), std::invalid_argument);  // even window
    CHECK_THROWS_AS(savgol_smooth(w, 3, 3), std::invalid_argument);   // window <= order
    CHECK_THROWS_AS(savgol_smooth(w, 5, 0), std::invalid_argument);   // order < 1
    CHECK_THROWS_AS(savgol_smooth(w, 51, 3), std::invalid_argument);  // window > n
}

TEST_CASE("calibrate_preamble on a noiseless OOK frame at 1400 bit/s") {
    RouterProfile r1 = profiles::r1();
    ChannelConfig c = clean_channel(500000);
    ModulationParams mp;
    mp.t_on_us = mp.t_off_us = 714;
    Bits frame = build_frame(random_bits(256, 21));
    Waveform w = render_waveform(modulate_ook(frame, mp), r1, c);
    auto cal = calibrate_preamble(w, Scheme::ook);
    REQUIRE(cal.has_value());
    CHECK_THAT(cal->bit_period_us, Catch::Matchers::WithinAbs(714.0, 2.0));  // one sample
    CHECK_THAT(cal->level_off_mv, Catch::Matchers::WithinAbs(4.0, 0.5));
    CHECK_THAT(cal->level_on_mv, Catch::Matchers::WithinAbs(14.0, 0.5));
    CHECK_THAT(cal->start_offset_us, Catch::Matchers::WithinAbs(8 * 714.0, 100.0));
}

TEST_CASE("calibrate_preamble finds a frame after 50 ms of silence") {
    RouterProfile r1 = profiles::r1();
    ChannelConfig c = clean_channel(500000);
    ModulationParams mp;
    mp.t_on_us = mp.t_off_us = 714;
    Bits tx(70, 0);  // ~50 ms of dark channel
    Bits frame = build_frame(random_bits(256, 22));
    tx.insert(tx.end(), frame.begin(), frame.end());
    Waveform w = render_waveform(modulate_ook(tx, mp), r1, c);
    auto cal = calibrate_preamble(w, Scheme::ook);
    REQUIRE(cal.has_value());
    CHECK_THAT(cal->start_offset_us, Catch::Matchers::WithinAbs((70.0 + 8.0) * 714.0, 150.0));
}

TEST_CASE("calibrate_preamble reports sync-not-found on pure ambient") {
    RouterProfile r1 = profiles::r1();
    ChannelConfig c;
    c.sample_rate = 100000;
    c.noise_sigma_mv = 1.0;
    c.rng_seed = 3;
    TimelineBuilder tb(1);
    Waveform w = render_waveform(tb.finish(50000), r1, c);
    CHECK_FALSE(calibrate_preamble(w, Scheme::ook).has_value());
}

TEST_CASE("noiseless OOK round trip recovers random bits exactly") {
    RouterProfile r2 = profiles::r2();
    ChannelConfig c = clean_channel();
    ModulationParams mp;
    mp.t_on_us = mp.t_off_us = 290;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Bits d = random_bits(2000, seed);
        Waveform w = render_waveform(modulate_ook(d, mp), r2, c);
        DemodResult r = demod_sensor(w, Scheme::ook, known_cal(290, r2, r2.per_led_step_mv));
        CAPTURE(seed);
        REQUIRE(Bits(r.bits.begin(), r.bits.begin() + d.size()) == d);
    }
}

TEST_CASE("noiseless Manchester round trip") {
    RouterProfile r1 = profiles::r1();
    ChannelConfig c = clean_channel();
    ModulationParams mp;
    mp.t_on_us = mp.t_off_us = 700;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Bits d = random_bits(1000, seed + 10);
        Waveform w = render_waveform(modulate_manchester(d, mp), r1, c);
        DemodResult r = demod_sensor(w, Scheme::manchester, known_cal(1400, r1, r1.per_led_step_mv));
        CAPTURE(seed);
        REQUIRE(Bits(r.bits.begin(), r.bits.begin() + d.size()) == d);
    }
}

TEST_CASE("noiseless B-FSK round trip classifies pulse durations") {
    RouterProfile r1 = profiles::r1();
    ChannelConfig c = clean_channel();
    ModulationParams mp;
    mp.t_off_us = 1400;
    mp.t_on_us = 2800;
    mp.t_d_us = 700;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Bits d = random_bits(500, seed + 20);
        Waveform w = render_waveform(modulate_bfsk(d, mp), r1, c);
        // bit_period doubles as the pulse-duration decision boundary
        DemodResult r = demod_sensor(w, Scheme::bfsk, known_cal(2100, r1, r1.per_led_step_mv));
        CAPTURE(seed);
        REQUIRE(r.bits == d);
    }
}

TEST_CASE("noiseless 8-level ASK round trip on the multi-LED profile") {
    RouterProfile p = profiles::r1_multi();
    ChannelConfig c = clean_channel();
    ModulationParams mp;
    mp.n_leds = p.n_leds;
    mp.t_all_us = 300;
    mp.t_d_us = 0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Bits d = random_bits(999, seed + 30);  // 333 symbols of 3 bits
        Bits expanded;
        for (size_t g = 0; g < d.size(); g += 3) {
            int v = d[g] * 4 + d[g + 1] * 2 + d[g + 2];
            for (uint32_t l = 0; l < p.n_leds; ++l) expanded.push_back(l < uint32_t(v) ? 1 : 0);
        }
        Waveform w = render_waveform(modulate_ask_multi(expanded, mp), p, c);
        Calibration cal = known_cal(300, p, 7 * p.per_led_step_mv, 0, 300);
        DemodResult r = demod_sensor(w, Scheme::ask, cal, 8);
        CAPTURE(seed);
        REQUIRE(r.bits == d);
    }
}

TEST_CASE("demod_sensor rejects bad inputs") {
    RouterProfile r1 = profiles::r1();
    Waveform w = make_waveform(std::vector<double>(100, 4.0), 100000);
    Calibration cal = known_cal(290, r1, 10);
    CHECK_THROWS_AS(demod_sensor(w, Scheme::ook, cal, 4), std::invalid_argument);
    Calibration bad = cal;
    bad.bit_period_us = 0;
    CHECK_THROWS_AS(demod_sensor(w, Scheme::ook, bad), std::invalid_argument);
    CHECK_THROWS_AS(demod_sensor(w, Scheme::ask, cal, 6), std::invalid_argument);  // not 2^k
}

TEST_CASE("demod_camera") {
    SECTION("majority over frames_per_bit frames, single LED") {
        FrameSeries fs;
        fs.fps = 30;
        fs.n_leds = 1;
        for (uint8_t b : Bits{1, 0, 0, 1})
            for (int k = 0; k < 2; ++k) fs.frames.push_back({b});
        CHECK(demod_camera(fs, 2) == Bits{1, 0, 0, 1});
    }
    SECTION("multi-LED frames concatenate per-LED bits in index order") {
        FrameSeries fs;
        fs.fps = 30;
        fs.n_leds = 3;
        for (int k = 0; k < 2; ++k) fs.frames.push_back({1, 0, 1});
        for (int k = 0; k < 2; ++k) fs.frames.push_back({0, 1, 1});
        CHECK(demod_camera(fs, 2) == Bits{1, 0, 1, 0, 1, 1});
    }
    SECTION("led subset restricts and orders the output") {
        FrameSeries fs;
        fs.fps = 30;
        fs.n_leds = 3;
        for (int k = 0; k < 2; ++k) fs.frames.push_back({1, 0, 1});
        CHECK(demod_camera(fs, 2, {2}) == Bits{1});
    }
    SECTION("frames_per_bit below 2 is refused") {
        FrameSeries fs;
        fs.fps = 30;
        fs.n_leds = 1;
        fs.frames.push_back({1});
        CHECK_THROWS_AS(demod_camera(fs, 1), SubNyquistError);
    }
}

TEST_CASE("sub-bit camera sampling aliases to chance-level BER") {
    RouterProfile r1 = profiles::r1();
    CameraConfig cam;
    cam.fps = 30;
    double bit_us = 0.5e6 / cam.fps;  // bit period = half a frame period
    ModulationParams mp;
    mp.t_on_us = mp.t_off_us = bit_us;
    Bits d = random_bits(2000, 77);
    FrameSeries fs = capture_camera(modulate_ook(d, mp), r1, cam);
    Bits rx = demod_camera(fs, 2);
    // each decoded bit covers 4 transmitted bits; compare against the senders
    BerReport ber = compute_ber(Bits(d.begin(), d.begin() + rx.size() * 4), [&] {
        Bits stretched;
        for (uint8_t b : rx)
            for (int k = 0; k < 4; ++k) stretched.push_back(b);
        return stretched;
    }());
    CHECK(ber.ber > 0.3);
    CHECK(ber.ber < 0.7);
}

TEST_CASE("decode_stream") {
    SECTION("one frame") {
        Bits p = random_bits(256, 40);
        DecodeReport r = decode_stream(build_frame(p));
        CHECK(r.frames_ok == 1);
        REQUIRE(r.payloads.size() == 1);
        CHECK(r.payloads[0] == p);
        CHECK(r.frames_crc_failed == 0);
    }
    SECTION("two concatenated frames in order") {
        Bits p1 = random_bits(256, 41), p2 = random_bits(256, 42);
        Bits stream = build_frame(p1);
        Bits f2 = build_frame(p2);
        stream.insert(stream.end(), f2.begin(), f2.end());
        DecodeReport r = decode_stream(stream);
        REQUIRE(r.frames_ok == 2);
        CHECK(r.payloads[0] == p1);
        CHECK(r.payloads[1] == p2);
    }
    SECTION("three flipped payload bits are counted as one CRC failure") {
        Bits stream = build_frame(Bits(256, 0));
        stream[10] ^= 1;
        stream[11] ^= 1;
        stream[12] ^= 1;
        // the corrupted stream must still contain exactly one preamble match
        int matches = 0;
        for (size_t i = 0; i + 8 <= stream.size(); ++i) {
            bool m = true;
            for (int k = 0; k < 8; ++k)
                if (stream[i + k] != (k % 2 == 0 ? 1 : 0)) { m = false; break; }
            if (m) ++matches;
        }
        REQUIRE(matches == 1);
        DecodeReport r = decode_stream(stream);
        CHECK(r.frames_ok == 0);
        CHECK(r.frames_crc_failed == 1);
    }
    SECTION("truncated tail counts as a sync failure") {
        Bits stream = build_frame(random_bits(256, 43));
        stream.resize(300);  // second preamble start would not fit
        Bits extra = preamble_bits();
        stream.insert(stream.end(), extra.begin(), extra.end());
        DecodeReport r = decode_stream(stream);
        CHECK(r.frames_ok == 1);
        CHECK(r.frames_sync_failed == 1);
    }
}

TEST_CASE("compute_ber") {
    Bits a = random_bits(128, 50);
    CHECK(compute_ber(a, a).ber == 0.0);

    Bits b = a;
    for (auto& bit : b) bit ^= 1;
    CHECK(compute_ber(a, b).ber == 1.0);

    Bits c = random_bits(32, 51);
    Bits d = c;
    d[5] ^= 1;
    CHECK_THAT(compute_ber(c, d).ber, Catch::Matchers::WithinAbs(0.03125, 1e-12));

    Bits shorter(a.begin(), a.begin() + 100);
    BerReport r = compute_ber(a, shorter);
    CHECK(r.bits_errored == 28);
    CHECK_THAT(r.ber, Catch::Matchers::WithinAbs(28.0 / 128.0, 1e-12));
}
