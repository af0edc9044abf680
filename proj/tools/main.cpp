#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "honeykit/analytics.hpp"
#include "honeykit/artifacts.hpp"
#include "honeykit/config.hpp"
#include "honeykit/geo.hpp"
#include "honeykit/passaudit.hpp"
#include "honeykit/sentinel.hpp"
#include "honeykit/sim.hpp"
#include "honeykit/sink.hpp"
#include "honeykit/ssh.hpp"
#include "honeykit/store.hpp"
#include "honeykit/ttyrec.hpp"
#include "honeykit/util.hpp"

using namespace honeykit;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int fail(const std::string& msg, int code = 1) {
    std::cerr << "honeykit: " << msg << "\n";
    return code;
}

bool store_exists(const std::string& dir) {
    return std::filesystem::exists(std::filesystem::path(dir) / "meta.json");
}

std::optional<size_t> top_of(int top) {
    if (top < 0) return std::nullopt;
    return static_cast<size_t>(top);
}

// --- serve -----------------------------------------------------------------

struct ServeOpts {
    std::string config_path;
};

int run_serve(const ServeOpts& o) {
    AppConfig cfg;
    try {
        cfg = load_config(o.config_path);
    } catch (const std::exception& e) {
        return fail(std::string(e.what()) + " (--config " + o.config_path + ")", 2);
    }
    if (!cfg.ssh_enabled && !cfg.sentinel_enabled)
        return fail("nothing to run: both sensors are disabled in " + o.config_path);

    std::error_code ec;
    auto log_parent = std::filesystem::path(cfg.event_log).parent_path();
    if (!log_parent.empty()) std::filesystem::create_directories(log_parent, ec);

    auto sink = std::make_shared<FileEventSink>(cfg.event_log);
    std::optional<ArtifactStore> artifacts;
    std::unique_ptr<SshSensor> ssh;
    std::unique_ptr<PortSentinel> sentinel;

    try {
        if (cfg.ssh_enabled) {
            artifacts.emplace((std::filesystem::path(cfg.store_dir) / "artifacts").string());
            cfg.ssh.artifacts = &*artifacts;
            ssh = std::make_unique<SshSensor>(cfg.ssh, cfg.policy, sink);
            ssh->start();
            std::cerr << "ssh-sensor listening on " << cfg.ssh.bind_address << ":" << ssh->port()
                      << "\n";
        }
        if (cfg.sentinel_enabled) {
            sentinel = std::make_unique<PortSentinel>(cfg.sentinel, cfg.ports, sink);
            sentinel->start();
            for (const auto& p : cfg.ports) {
                uint16_t bound = sentinel->bound_port(p.local_port, p.transport);
                const char* tr = p.transport == TransportKind::tcp ? "tcp" : "udp";
                if (bound)
                    std::cerr << "port-sentinel " << p.service_label << " on " << bound << "/"
                              << tr << " (logical " << p.local_port << ")\n";
                else
                    std::cerr << "port-sentinel " << p.service_label << " disabled: port "
                              << p.bind_port.value_or(p.local_port) << "/" << tr
                              << " did not bind\n";
            }
            if (sentinel->active_profiles() == 0 && !ssh)
                return fail("no sentinel port could bind");
        }
    } catch (const std::exception& e) {
        return fail(e.what());
    }

    std::cerr << "events -> " << cfg.event_log << (cfg.test_mode ? " (test mode)" : "") << "\n";

    struct sigaction sa{};
    sa.sa_handler = on_signal;
    sigaction(SIGINT, &sa, nullptr);
    sigaction(SIGTERM, &sa, nullptr);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));

    std::cerr << "shutting down\n";
    if (ssh) ssh->stop();
    if (sentinel) sentinel->stop();
    return 0;
}

// --- ingest ----------------------------------------------------------------

struct IngestOpts {
    std::vector<std::string> paths;
    std::string store_dir;
    std::string quarantine;
    bool anonymize = false;
};

int run_ingest(const IngestOpts& o) {
    try {
        TelemetryStore store(o.store_dir, {o.anonymize});
        auto sum = store.ingest(o.paths, o.quarantine);
        nlohmann::json j{{"new_events", sum.new_events},
                         {"duplicates", sum.duplicates},
                         {"malformed", sum.malformed},
                         {"file_errors", sum.file_errors}};
        std::cout << j.dump(2) << "\n";
        return sum.file_errors.empty() ? 0 : 1;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

// --- report ----------------------------------------------------------------

struct ReportOpts {
    std::string dimension;
    std::string store_dir;
    std::string format = "ascii_bar";
    std::string geo_path;
    std::string kind;
    int top = -1;
    int tz_offset = 0;
};

int run_report(const ReportOpts& o) {
    auto fmt = export_format_from_string(o.format);
    if (!fmt) return fail("unknown format '" + o.format + "'", 2);
    if (!store_exists(o.store_dir)) return fail("no store at " + o.store_dir);

    try {
        TelemetryStore store(o.store_dir);
        auto snap = store.snapshot();

        GeoDb geo;
        std::string geo_src = o.geo_path;
        if (geo_src.empty() && store.geo_db_path()) geo_src = *store.geo_db_path();
        if (!geo_src.empty()) geo = load_geo_db(geo_src);

        auto k = top_of(o.top);
        std::string out;
        if (o.dimension == "ports") {
            out = export_table(breakdown_by_port(*snap, k), *fmt);
        } else if (o.dimension == "sources") {
            out = export_table(top_sources(*snap, k, geo), *fmt);
        } else if (o.dimension == "credentials") {
            out = export_table(top_credentials(*snap, k, CredField::pair), *fmt);
        } else if (o.dimension == "usernames") {
            out = export_table(top_credentials(*snap, k, CredField::username), *fmt);
        } else if (o.dimension == "passwords") {
            out = export_table(top_credentials(*snap, k, CredField::password), *fmt);
        } else if (o.dimension == "commands") {
            out = export_table(top_commands(*snap, k), *fmt);
        } else if (o.dimension == "hours") {
            std::optional<EventKind> kind;
            if (!o.kind.empty()) {
                kind = event_kind_from_string(o.kind);
                if (!kind) return fail("unknown event kind '" + o.kind + "'", 2);
            }
            out = export_hours(hour_of_day_histogram(*snap, o.tz_offset, kind), *fmt);
        } else if (o.dimension == "lengths") {
            out = export_lengths(password_length_histogram(*snap), *fmt);
        } else if (o.dimension == "downloads") {
            out = export_join(downloads_per_source(*snap, top_source_ips(*snap, k)), *fmt);
        } else if (o.dimension == "artifacts") {
            out = export_artifacts(unique_artifacts(*snap), *fmt);
        } else {
            return fail("unknown dimension '" + o.dimension + "'", 2);
        }
        std::cout << out;
        if (!out.empty() && out.back() != '\n') std::cout << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

// --- playback / transcript ---------------------------------------------------

struct PlaybackOpts {
    std::string path;
    double speed = 1.0;
    bool instant = false;
    bool render_input = false;
};

int run_playback(const PlaybackOpts& o) {
    try {
        TtyRecording rec = load_recording(o.path);
        PlaybackOptions opt;
        opt.speed = o.speed;
        opt.instant = o.instant;
        opt.render_input = o.render_input;
        auto report = playback(rec, opt, std::cout);
        std::cout.flush();
        std::cerr << "played " << report.frames_played << " frames from " << rec.session_id
                  << (report.truncated ? " (truncated)" : "") << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

int run_transcript(const std::string& path) {
    try {
        std::cout << transcript(load_recording(path));
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

// --- passcheck ---------------------------------------------------------------

struct PasscheckOpts {
    std::string password;
    std::string store_dir;
    std::vector<std::string> wordlists;
    std::vector<std::string> rules;
};

int run_passcheck(PasscheckOpts o) {
    if (o.password == "-") {
        if (!std::getline(std::cin, o.password)) return fail("no password on stdin", 2);
    }
    if (!store_exists(o.store_dir)) return fail("no store at " + o.store_dir);
    try {
        TelemetryStore store(o.store_dir);
        auto corpus = build_corpus(*store.snapshot(), o.wordlists);
        auto rules = o.rules.empty() ? default_audit_rules() : o.rules;
        auto verdict = check(o.password, corpus, rules);

        // deliberately omits the candidate and any matched corpus bytes
        nlohmann::json j{{"status", to_string(verdict.status)},
                         {"corpus_size", corpus.entries.size()}};
        j["count"] = verdict.count ? nlohmann::json(*verdict.count) : nlohmann::json();
        j["rank"] = verdict.rank ? nlohmann::json(*verdict.rank) : nlohmann::json();
        j["transform"] =
            verdict.transform_applied ? nlohmann::json(*verdict.transform_applied) : nlohmann::json();
        std::cout << j.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

// --- simulate ----------------------------------------------------------------

struct SimulateOpts {
    std::string scenario_path;
    std::string target = "127.0.0.1:2222";
    uint64_t seed = 0;
    bool seed_set = false;
    bool test_mode = false;
    std::vector<std::string> tcp_remap;
    std::vector<std::string> udp_remap;
    uint32_t timeout_ms = 5000;
};

bool parse_remap(const std::vector<std::string>& specs, std::map<uint16_t, uint16_t>& out) {
    for (const auto& s : specs) {
        size_t eq = s.find('=');
        if (eq == std::string::npos) return false;
        int logical = std::atoi(s.substr(0, eq).c_str());
        int physical = std::atoi(s.substr(eq + 1).c_str());
        if (logical <= 0 || logical > 65535 || physical <= 0 || physical > 65535) return false;
        out[static_cast<uint16_t>(logical)] = static_cast<uint16_t>(physical);
    }
    return true;
}

int run_simulate(const SimulateOpts& o) {
    Scenario sc;
    try {
        sc = load_scenario(o.scenario_path);
    } catch (const std::exception& e) {
        return fail(std::string("scenario: ") + e.what(), 2);
    }
    if (o.seed_set) sc.seed = o.seed;

    SimTargets targets;
    size_t colon = o.target.rfind(':');
    if (colon == std::string::npos) return fail("--target wants host:port", 2);
    targets.host = o.target.substr(0, colon);
    int port = std::atoi(o.target.substr(colon + 1).c_str());
    if (targets.host.empty() || port <= 0 || port > 65535)
        return fail("--target wants host:port", 2);
    targets.ssh_port = static_cast<uint16_t>(port);
    targets.test_mode = o.test_mode;
    targets.connect_timeout_ms = o.timeout_ms;
    if (!parse_remap(o.tcp_remap, targets.tcp_remap) ||
        !parse_remap(o.udp_remap, targets.udp_remap))
        return fail("remap wants logical=physical port pairs", 2);

    auto res = run_scenario(sc, targets);
    std::cout << scenario_result_json(res) << "\n";
    return res.ok ? 0 : 1;
}

// --- geo-import ----------------------------------------------------------------

int run_geo_import(const std::string& csv_path, const std::string& store_dir) {
    try {
        GeoDb db = load_geo_db(csv_path); // validates before anything lands
        TelemetryStore store(store_dir);
        store.install_geo_db(csv_path);
        nlohmann::json j{{"ranges", db.size()}, {"store", store.dir()}};
        std::cout << j.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"honeypot sensor suite"};
    app.require_subcommand(1);

    ServeOpts serve_opts;
    serve_opts.config_path = default_config_path();
    auto* serve = app.add_subcommand("serve", "run the sensors until interrupted");
    serve->add_option("--config", serve_opts.config_path, "config file")
        ->capture_default_str();

    IngestOpts ingest_opts;
    ingest_opts.store_dir = default_store_dir();
    auto* ingest = app.add_subcommand("ingest", "load event logs into the store");
    ingest->add_option("paths", ingest_opts.paths, "jsonl event files")->required();
    ingest->add_option("--store", ingest_opts.store_dir, "store directory")->capture_default_str();
    ingest->add_option("--quarantine", ingest_opts.quarantine, "where rejected lines go");
    ingest->add_flag("--anonymize", ingest_opts.anonymize, "mask the final source octet");

    ReportOpts report_opts;
    report_opts.store_dir = default_store_dir();
    auto* report = app.add_subcommand("report", "breakdowns over the store");
    report
        ->add_option("dimension", report_opts.dimension,
                     "ports|sources|credentials|usernames|passwords|commands|hours|lengths|"
                     "downloads|artifacts")
        ->required();
    report->add_option("--store", report_opts.store_dir, "store directory")->capture_default_str();
    report->add_option("--top", report_opts.top, "keep the top N rows");
    report->add_option("--format", report_opts.format, "csv|json|ascii_bar|geojson")
        ->capture_default_str();
    report->add_option("--geo", report_opts.geo_path, "geo csv (default: the imported db)");
    report->add_option("--kind", report_opts.kind, "narrow hours to one event kind");
    report->add_option("--tz-offset", report_opts.tz_offset, "minutes added before binning hours");

    PlaybackOpts playback_opts;
    auto* playback = app.add_subcommand("playback", "replay a tty recording");
    playback->add_option("recording", playback_opts.path, ".hpt file")->required();
    playback->add_option("--speed", playback_opts.speed, "time multiplier")->capture_default_str();
    playback->add_flag("--instant", playback_opts.instant, "no sleeps");
    playback->add_flag("--render-input", playback_opts.render_input,
                       "show attacker keystrokes reverse-video");

    std::string transcript_path;
    auto* transcript_cmd = app.add_subcommand("transcript", "frame-by-frame dump of a recording");
    transcript_cmd->add_option("recording", transcript_path, ".hpt file")->required();

    PasscheckOpts pass_opts;
    pass_opts.store_dir = default_store_dir();
    auto* passcheck = app.add_subcommand("passcheck", "audit a candidate password");
    passcheck->add_option("password", pass_opts.password, "candidate ('-' reads stdin)")
        ->required();
    passcheck->add_option("--store", pass_opts.store_dir, "store directory")
        ->capture_default_str();
    passcheck->add_option("--wordlist", pass_opts.wordlists, "extra password lists");
    passcheck->add_option("--rules", pass_opts.rules, "transform rules, in order");

    SimulateOpts sim_opts;
    auto* simulate = app.add_subcommand("simulate", "run a scripted attacker scenario");
    simulate->add_option("scenario", sim_opts.scenario_path, "scenario file")->required();
    simulate->add_option("--target", sim_opts.target, "ssh sensor host:port")
        ->capture_default_str();
    auto* seed_opt = simulate->add_option("--seed", sim_opts.seed, "override the scenario seed");
    simulate->add_flag("--test-mode", sim_opts.test_mode, "allow claimed source ips");
    simulate->add_option("--tcp-remap", sim_opts.tcp_remap, "logical=physical port pairs");
    simulate->add_option("--udp-remap", sim_opts.udp_remap, "logical=physical port pairs");
    simulate->add_option("--timeout", sim_opts.timeout_ms, "connect timeout ms");

    std::string geo_csv;
    std::string geo_store = default_store_dir();
    auto* geo_import = app.add_subcommand("geo-import", "install an ip-range geo db");
    geo_import->add_option("csv", geo_csv, "range csv file")->required();
    geo_import->add_option("--store", geo_store, "store directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "honeykit: " << e.what() << "\n";
        return 2;
    }

    if (*serve) return run_serve(serve_opts);
    if (*ingest) return run_ingest(ingest_opts);
    if (*report) return run_report(report_opts);
    if (*playback) return run_playback(playback_opts);
    if (*transcript_cmd) return run_transcript(transcript_path);
    if (*passcheck) return run_passcheck(pass_opts);
    if (*simulate) {
        sim_opts.seed_set = seed_opt->count() > 0;
        return run_simulate(sim_opts);
    }
    if (*geo_import) return run_geo_import(geo_csv, geo_store);
    return 2;
}
