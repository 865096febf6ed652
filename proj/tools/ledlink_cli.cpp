// ledlink command line: drives the framing, modulation, channel, receiver and
// harness layers from the shell.
//
// Exit codes: 0 success, 1 usage/configuration error, 2 decode failure beyond
// the accepted threshold.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "ledlink/harness.hpp"

using namespace ledlink;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string profile = "R2";
    std::string scheme = "ook";
    double rate = 0;  // 0 -> profile maximum
    uint64_t seed = 1;
    std::string config;
    std::string out = "out";
};

void add_common(CLI::App* app, CommonOpts& o) {
    app->add_option("--profile", o.profile, "Router profile: R1, R2 or R1_MULTI");
    app->add_option("--scheme", o.scheme, "Modulation scheme: ook, bfsk, manchester or ask");
    app->add_option("--rate", o.rate, "Bit rate in bit/s (0 = profile maximum)");
    app->add_option("--seed", o.seed, "Top-level RNG seed");
    app->add_option("--config", o.config, "Experiment config file (INI-style key=value)");
    app->add_option("--out", o.out, "Output directory");
}

ExperimentConfig build_config(const CommonOpts& o, const CLI::App* app) {
    ExperimentConfig cfg;
    if (!o.config.empty()) cfg = parse_config_file(o.config);
    // explicit flags override the config file
    if (o.config.empty() || app->count("--scheme")) cfg.scheme = scheme_from_name(o.scheme);
    if (o.config.empty() || app->count("--profile")) cfg.profile = o.profile;
    if (o.config.empty() || app->count("--rate")) cfg.rate_bps = o.rate;
    if (o.config.empty() || app->count("--seed")) cfg.seed = o.seed;
    return cfg;
}

// Modulated frame bit stream + timeline for one payload.
LedTimeline make_timeline(const ExperimentConfig& cfg, const RouterProfile& prof,
                          Bits* sent_out = nullptr) {
    Bits payload = !cfg.payload_bits.empty()
                       ? bits::from_text(cfg.payload_bits)
                       : random_bits(kPayloadBits, derive_seed(cfg.seed, 0));
    Bits frame = build_frame(payload);
    ModulationParams params = params_for_rate(cfg.scheme, prof, cfg.rate_bps);
    if (cfg.scheme == Scheme::ask) {
        int n_levels = sensor_ask_levels(prof);
        int b = ask_bits_per_symbol(n_levels);
        Bits sent = frame;
        while (sent.size() % b != 0) sent.push_back(0);
        if (sent_out) *sent_out = sent;
        return modulate_ask_multi(ask_level_encode(frame, n_levels, prof.n_leds), params);
    }
    if (sent_out) *sent_out = frame;
    return modulate(cfg.scheme, frame, params);
}

int cmd_transmit(const CommonOpts& o, const CLI::App* app) {
    ExperimentConfig cfg = build_config(o, app);
    RouterProfile prof = profiles::by_name(cfg.profile);
    LedTimeline tl = make_timeline(cfg, prof);
    ValidationReport vr = validate_timeline(tl, prof);
    if (!vr.ok()) {
        std::cerr << "timing violations for profile " << prof.name << ":\n" << vr.to_string();
        return 1;
    }
    fs::create_directories(o.out);
    write_timeline_csv((fs::path(o.out) / "timeline.csv").string(), tl);
    write_trace_csv((fs::path(o.out) / "trace.csv").string(), emit_trace(tl, prof));
    std::cout << "profile=" << prof.name << "\nscheme=" << scheme_name(cfg.scheme)
              << "\nevents=" << tl.events.size()
              << "\nduration_us=" << tl.total_duration_us
              << "\nout=" << o.out << "/timeline.csv," << o.out << "/trace.csv\n";
    return 0;
}

int cmd_render(const CommonOpts& o, const CLI::App* app, const std::string& timeline_in) {
    ExperimentConfig cfg = build_config(o, app);
    RouterProfile prof = profiles::by_name(cfg.profile);
    LedTimeline tl = timeline_in.empty() ? make_timeline(cfg, prof)
                                         : read_timeline_csv(timeline_in);
    ChannelConfig ch = cfg.channel;
    ch.rng_seed = derive_seed(cfg.seed, 0x10000u);
    Waveform w = render_waveform(tl, prof, ch);
    fs::create_directories(o.out);
    auto path = fs::path(o.out) / "waveform.txt";
    write_waveform_text(path.string(), w);
    std::cout << "samples=" << w.samples.size() << "\nsample_rate_hz=" << w.sample_rate
              << "\nduration_us=" << w.duration_us() << "\nout=" << path.string() << '\n';
    return 0;
}

int cmd_capture(const CommonOpts& o, const CLI::App* app, const std::string& timeline_in,
                double fps) {
    ExperimentConfig cfg = build_config(o, app);
    if (app->count("--fps")) cfg.camera.fps = fps;
    RouterProfile prof = profiles::by_name(cfg.profile);
    LedTimeline tl = timeline_in.empty() ? make_timeline(cfg, prof)
                                         : read_timeline_csv(timeline_in);
    FrameSeries fsr = capture_camera(tl, prof, cfg.camera);
    fs::create_directories(o.out);
    auto path = fs::path(o.out) / "frames.csv";
    write_frames_csv(path.string(), fsr);
    std::cout << "frames=" << fsr.frames.size() << "\nfps=" << fsr.fps
              << "\nn_leds=" << fsr.n_leds << "\nout=" << path.string() << '\n';
    return 0;
}

int cmd_demod(const CommonOpts& o, const CLI::App* app, const std::string& wave_in,
              const std::string& frames_in, double fps, int frames_per_bit) {
    ExperimentConfig cfg = build_config(o, app);
    Bits rx;
    if (!frames_in.empty()) {
        FrameSeries fsr = read_frames_csv(frames_in, fps);
        rx = demod_camera(fsr, frames_per_bit);
    } else if (!wave_in.empty()) {
        Waveform w = read_waveform_text(wave_in);
        RouterProfile prof = profiles::by_name(cfg.profile);
        ModulationParams params = params_for_rate(cfg.scheme, prof, cfg.rate_bps);
        int n_levels = cfg.scheme == Scheme::ask ? sensor_ask_levels(prof) : 2;
        Calibration cal;
        bool calibrated = false;
        if (cfg.scheme == Scheme::ook || cfg.scheme == Scheme::manchester) {
            if (auto c = calibrate_preamble(w, cfg.scheme)) {
                cal = *c;
                cal.start_offset_us -= 8.0 * cal.bit_period_us;
                calibrated = true;
            }
        }
        if (!calibrated) cal = derive_calibration(cfg.scheme, params, prof, n_levels);
        rx = demod_sensor(w, cfg.scheme, cal, n_levels).bits;
    } else {
        std::cerr << "demod: need --waveform or --frames\n";
        return 1;
    }
    DecodeReport d = decode_stream(rx);
    std::cout << "bits_demodulated=" << rx.size() << '\n' << d.to_kv();
    for (const auto& p : d.payloads) std::cout << "payload=" << bits::to_text(p) << '\n';
    return d.frames_ok > 0 ? 0 : 2;
}

int cmd_roundtrip(const CommonOpts& o, const CLI::App* app, int trials, double ber_threshold,
                  bool use_camera) {
    ExperimentConfig cfg = build_config(o, app);
    if (app->count("--trials")) cfg.trials = trials;
    if (use_camera) cfg.use_camera = true;
    RoundtripResult r = run_roundtrip(cfg);
    if (!r.feasible) {
        std::cerr << "infeasible timing for profile " << cfg.profile << ":\n" << r.violation;
        return 1;
    }
    std::cout << "scheme=" << scheme_name(cfg.scheme) << "\nprofile=" << cfg.profile
              << "\nthroughput_bps=" << r.throughput_bps << '\n'
              << r.ber.to_kv() << r.decode.to_kv();
    return r.ber.ber <= ber_threshold && r.decode.frames_ok > 0 ? 0 : 2;
}

int cmd_sweep(const CommonOpts& o, const CLI::App* app, const std::string& variable,
              const std::vector<double>& values, int trials) {
    ExperimentConfig cfg = build_config(o, app);
    if (app->count("--trials")) cfg.trials = trials;
    SweepResult sr = sweep(cfg, variable, values);
    fs::create_directories(o.out);
    auto path = fs::path(o.out) / ("sweep_" + variable + ".csv");
    std::ofstream os(path);
    os << sr.to_csv();
    std::cout << sr.to_csv() << "out=" << path.string() << '\n';
    return 0;
}

int cmd_reproduce(const CommonOpts& o, const std::string& figure) {
    std::cout << reproduce(figure, o.out, o.seed);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Router LED optical channel toolkit"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string timeline_in, wave_in, frames_in, variable = "noise_sigma_mv", figure;
    std::vector<double> values;
    double fps = 30, ber_threshold = 0.05;
    int frames_per_bit = 2, trials = 1;
    bool use_camera = false;

    auto* transmit = app.add_subcommand("transmit", "Modulate a frame onto an LED timeline");
    add_common(transmit, o);

    auto* render = app.add_subcommand("render", "Render a timeline to a photodiode waveform");
    add_common(render, o);
    render->add_option("--timeline", timeline_in, "Timeline CSV to render (default: fresh frame)");

    auto* capture = app.add_subcommand("capture", "Capture a timeline as camera frames");
    add_common(capture, o);
    capture->add_option("--timeline", timeline_in, "Timeline CSV to capture");
    capture->add_option("--fps", fps, "Camera frame rate");

    auto* demod = app.add_subcommand("demod", "Demodulate and decode a capture");
    add_common(demod, o);
    demod->add_option("--waveform", wave_in, "Waveform text file (sensor path)");
    demod->add_option("--frames", frames_in, "Frame series CSV (camera path)");
    demod->add_option("--fps", fps, "Frame rate of --frames input");
    demod->add_option("--frames-per-bit", frames_per_bit, "Camera frames per bit");

    auto* roundtrip = app.add_subcommand("roundtrip", "Full transmit/channel/decode round trip");
    add_common(roundtrip, o);
    roundtrip->add_option("--trials", trials, "Number of independent trials");
    roundtrip->add_option("--ber-threshold", ber_threshold, "Maximum acceptable BER");
    roundtrip->add_flag("--camera", use_camera, "Use the camera receiver");

    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one variable, emit a CSV");
    add_common(sweep_cmd, o);
    sweep_cmd->add_option("--variable", variable,
                          "bit_rate | noise_sigma_mv | fps | frames_per_bit");
    sweep_cmd->add_option("--values", values, "Sweep points")->required();
    sweep_cmd->add_option("--trials", trials, "Trials per point");

    auto* repro = app.add_subcommand("reproduce", "Re-run a canned experiment");
    add_common(repro, o);
    repro->add_option("--figure", figure, "fig4..fig10 or table9")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // --help is success; anything else is a usage error
    }

    try {
        if (transmit->parsed()) return cmd_transmit(o, transmit);
        if (render->parsed()) return cmd_render(o, render, timeline_in);
        if (capture->parsed()) return cmd_capture(o, capture, timeline_in, fps);
        if (demod->parsed()) return cmd_demod(o, demod, wave_in, frames_in, fps, frames_per_bit);
        if (roundtrip->parsed()) return cmd_roundtrip(o, roundtrip, trials, ber_threshold, use_camera);
        if (sweep_cmd->parsed()) return cmd_sweep(o, sweep_cmd, variable, values, trials);
        if (repro->parsed()) return cmd_reproduce(o, figure);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
