#include "devchain/bench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "devchain/errors.hpp"

namespace devchain::bench {

namespace {

// Numbers in specs and reports: fixed decimals for table cells, shortest
// faithful form for config round trips.
std::string fmt_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string fmt_compact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Rate and duration fields arrive as JSON numbers from hand-written configs
// or as strings from canonically encoded ones.
double number_field(const doc& d, const std::string& key) {
    const doc& v = require_field(d, key.c_str());
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        size_t used = 0;
        double parsed = 0;
        try {
            parsed = std::stod(s, &used);
        } catch (const std::exception&) {
            raise(errc::bad_args, "field '" + key + "' is not a number: '" + s + "'");
        }
        if (used != s.size())
            raise(errc::bad_args, "field '" + key + "' is not a number: '" + s + "'");
        return parsed;
    }
    raise(errc::bad_args, "field '" + key + "' must be a number");
}

double finite_positive(double v, const std::string& what) {
    if (!std::isfinite(v) || v <= 0) raise(errc::bad_args, what + " must be positive");
    return v;
}

}  // namespace

std::string_view workload_name(workload_kind w) {
    return w == workload_kind::query_state ? "query_state" : "submit_write";
}

workload_kind workload_from_name(std::string_view name) {
    if (name == "query_state") return workload_kind::query_state;
    if (name == "submit_write") return workload_kind::submit_write;
    raise(errc::bad_args, "unknown workload '" + std::string(name) + "'");
}

std::string_view termination_name(termination_kind t) {
    return t == termination_kind::tx_number ? "tx_number" : "tx_duration";
}

termination_kind termination_from_name(std::string_view name) {
    if (name == "tx_number") return termination_kind::tx_number;
    if (name == "tx_duration") return termination_kind::tx_duration;
    raise(errc::bad_args, "unknown termination '" + std::string(name) + "'");
}

std::string_view rate_name(rate_kind r) {
    return r == rate_kind::fixed_rate ? "fixed_rate" : "linear_rate";
}

rate_kind rate_from_name(std::string_view name) {
    if (name == "fixed_rate") return rate_kind::fixed_rate;
    if (name == "linear_rate") return rate_kind::linear_rate;
    raise(errc::bad_args, "unknown rate controller '" + std::string(name) + "'");
}

std::string round_spec::name() const {
    std::string out = "Round" + std::to_string(index) + "-" + label + "-";
    out += termination == termination_kind::tx_number ? "TxNumber" : "TxDuration";
    out += rate == rate_kind::fixed_rate ? "-FixedRate" : "-LinearRate";
    return out;
}

doc round_spec::to_doc() const {
    doc d{{"index", index},
          {"label", label},
          {"workload", std::string(workload_name(workload))},
          {"params", workload_params},
          {"termination", std::string(termination_name(termination))},
          {"rate", std::string(rate_name(rate))},
          {"workers", workers}};
    if (termination == termination_kind::tx_number)
        d["count"] = count;
    else
        d["seconds"] = fmt_compact(seconds);
    if (rate == rate_kind::fixed_rate) {
        d["tps"] = fmt_compact(start_tps);
    } else {
        d["start_tps"] = fmt_compact(start_tps);
        d["end_tps"] = fmt_compact(end_tps);
    }
    return d;
}

round_spec round_spec::from_doc(const doc& d) {
    round_spec s;
    s.index = require_uint(d, "index");
    s.label = require_string(d, "label");
    if (s.label.empty()) raise(errc::bad_args, "round label must not be empty");
    if (s.label.find('-') != std::string::npos)
        raise(errc::bad_args, "round label must not contain '-'");
    s.workload = workload_from_name(require_string(d, "workload"));
    if (d.contains("params")) s.workload_params = d.at("params");
    s.termination = termination_from_name(require_string(d, "termination"));
    if (s.termination == termination_kind::tx_number) {
        s.count = require_uint(d, "count");
        if (s.count == 0) raise(errc::bad_args, "count must be positive");
    } else {
        s.seconds = finite_positive(number_field(d, "seconds"), "seconds");
    }
    s.rate = rate_from_name(require_string(d, "rate"));
    if (s.rate == rate_kind::fixed_rate) {
        s.start_tps = finite_positive(number_field(d, "tps"), "tps");
        s.end_tps = s.start_tps;
    } else {
        s.start_tps = finite_positive(number_field(d, "start_tps"), "start_tps");
        s.end_tps = finite_positive(number_field(d, "end_tps"), "end_tps");
    }
    if (d.contains("workers")) s.workers = require_uint(d, "workers");
    if (s.workers == 0) raise(errc::bad_args, "workers must be positive");
    return s;
}

std::vector<double> send_offsets(const round_spec& spec) {
    const double a = finite_positive(spec.start_tps, "rate");
    const double b = spec.rate == rate_kind::fixed_rate
                         ? a
                         : finite_positive(spec.end_tps, "rate");
    const bool counted = spec.termination == termination_kind::tx_number;
    if (counted && spec.count == 0) raise(errc::bad_args, "count must be positive");
    if (!counted) finite_positive(spec.seconds, "seconds");

    // Horizon of the ramp; for counted rounds it is where the cumulative
    // curve reaches exactly `count`.
    const double horizon = counted ? 2.0 * double(spec.count) / (a + b) : spec.seconds;
    const double curvature = (b - a) / (2.0 * horizon);

    auto instant = [&](uint64_t k) -> double {
        if (std::fabs(b - a) < 1e-12 * std::max(a, b)) return double(k) / a;
        // solve curvature*t^2 + a*t - k = 0 for the root inside [0, horizon]
        double disc = a * a + 4.0 * curvature * double(k);
        return (-a + std::sqrt(std::max(disc, 0.0))) / (2.0 * curvature);
    };

    std::vector<double> offsets;
    if (counted) {
        offsets.reserve(spec.count);
        for (uint64_t k = 0; k < spec.count; ++k) offsets.push_back(instant(k));
    } else {
        for (uint64_t k = 0;; ++k) {
            double t = instant(k);
            if (t >= spec.seconds) break;
            offsets.push_back(t);
        }
    }
    return offsets;
}

doc round_metrics::to_doc() const {
    return doc{{"name", name},
               {"succ", succ},
               {"fail", fail},
               {"send_rate_tps", send_rate_tps},
               {"max_latency_s", max_latency_s},
               {"min_latency_s", min_latency_s},
               {"avg_latency_s", avg_latency_s},
               {"throughput_tps", throughput_tps},
               {"partial", partial}};
}

round_metrics round_metrics::from_doc(const doc& d) {
    round_metrics m;
    m.name = require_string(d, "name");
    m.succ = require_uint(d, "succ");
    m.fail = require_uint(d, "fail");
    m.send_rate_tps = number_field(d, "send_rate_tps");
    m.max_latency_s = number_field(d, "max_latency_s");
    m.min_latency_s = number_field(d, "min_latency_s");
    m.avg_latency_s = number_field(d, "avg_latency_s");
    m.throughput_tps = number_field(d, "throughput_tps");
    m.partial = d.contains("partial") && d.at("partial").get<bool>();
    return m;
}

round_metrics run_round(const round_spec& spec, sut_adapter& sut) {
    const std::vector<double> schedule = send_offsets(spec);
    struct completion {
        double send_s = 0;
        double confirm_s = 0;
        bool ok = false;
        bool present = false;
    };
    std::vector<completion> done(schedule.size());
    std::atomic<size_t> next{0};
    std::atomic<bool> aborted{false};
    const auto t0 = std::chrono::steady_clock::now();
    auto since_start = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    auto lane = [&](size_t w) {
        for (;;) {
            if (aborted.load()) return;
            const size_t k = next.fetch_add(1);
            if (k >= schedule.size()) return;
            std::this_thread::sleep_until(t0 + std::chrono::duration<double>(schedule[k]));
            if (aborted.load()) return;
            completion c;
            c.send_s = since_start();
            try {
                c.ok = sut.issue(w, k);
            } catch (...) {
                aborted.store(true);
                return;
            }
            c.confirm_s = since_start();
            c.present = true;
            done[k] = c;
        }
    };

    std::vector<std::thread> lanes;
    lanes.reserve(spec.workers);
    for (size_t w = 0; w < spec.workers; ++w) lanes.emplace_back(lane, w);
    for (auto& t : lanes) t.join();

    round_metrics m;
    m.name = spec.name();
    m.partial = aborted.load();
    double first_send = 0, last_send = 0, last_confirm = 0, latency_sum = 0;
    bool any = false;
    for (const completion& c : done) {
        if (!c.present) continue;
        if (c.ok)
            ++m.succ;
        else
            ++m.fail;
        const double latency = c.confirm_s - c.send_s;
        if (!any) {
            first_send = c.send_s;
            last_send = c.send_s;
            last_confirm = c.confirm_s;
            m.min_latency_s = latency;
            m.max_latency_s = latency;
            any = true;
        } else {
            first_send = std::min(first_send, c.send_s);
            last_send = std::max(last_send, c.send_s);
            last_confirm = std::max(last_confirm, c.confirm_s);
            m.min_latency_s = std::min(m.min_latency_s, latency);
            m.max_latency_s = std::max(m.max_latency_s, latency);
        }
        latency_sum += latency;
    }
    const uint64_t attempted = m.succ + m.fail;
    if (attempted > 0) {
        m.avg_latency_s = latency_sum / double(attempted);
        m.send_rate_tps = double(attempted) / std::max(last_send - first_send, 1e-9);
        m.throughput_tps = double(m.succ) / std::max(last_confirm - first_send, 1e-9);
    }
    return m;
}

doc resource_summary::to_doc() const {
    return doc{{"name", name},
               {"cpu_max_pct", cpu_max_pct},
               {"cpu_avg_pct", cpu_avg_pct},
               {"mem_max_mb", mem_max_mb},
               {"mem_avg_mb", mem_avg_mb},
               {"traffic_in_mb", traffic_in_mb},
               {"traffic_out_mb", traffic_out_mb},
               {"disc_write_b", disc_write_b},
               {"disc_read_b", disc_read_b},
               {"partial", partial}};
}

resource_summary resource_summary::from_doc(const doc& d) {
    resource_summary s;
    s.name = require_string(d, "name");
    s.cpu_max_pct = number_field(d, "cpu_max_pct");
    s.cpu_avg_pct = number_field(d, "cpu_avg_pct");
    s.mem_max_mb = number_field(d, "mem_max_mb");
    s.mem_avg_mb = number_field(d, "mem_avg_mb");
    s.traffic_in_mb = number_field(d, "traffic_in_mb");
    s.traffic_out_mb = number_field(d, "traffic_out_mb");
    s.disc_write_b = number_field(d, "disc_write_b");
    s.disc_read_b = number_field(d, "disc_read_b");
    s.partial = d.contains("partial") && d.at("partial").get<bool>();
    return s;
}

std::string render_markdown(const std::vector<round_metrics>& rounds,
                            const std::vector<round_resources>& resources) {
    std::string out = "# Benchmark Report\n\n## Summary of performance metrics\n\n";
    out +=
        "| Name | Succ | Fail | Send Rate (TPS) | Max Latency (s) | Min Latency (s) "
        "| Avg Latency (s) | Throughput (TPS) |\n";
    out += "| --- | --- | --- | --- | --- | --- | --- | --- |\n";
    for (const round_metrics& m : rounds) {
        out += "| " + m.name + (m.partial ? " (partial)" : "");
        out += " | " + std::to_string(m.succ);
        out += " | " + std::to_string(m.fail);
        out += " | " + fmt_fixed(m.send_rate_tps, 1);
        out += " | " + fmt_fixed(m.max_latency_s, 2);
        out += " | " + fmt_fixed(m.min_latency_s, 2);
        out += " | " + fmt_fixed(m.avg_latency_s, 2);
        out += " | " + fmt_fixed(m.throughput_tps, 1);
        out += " |\n";
    }
    for (const round_resources& r : resources) {
        out += "\n## Resource utilization: " + r.round + "\n\n";
        out +=
            "| Name | CPU% (max) | CPU% (avg) | Memory(max) [MB] | Memory(avg) [MB] "
            "| Traffic In [MB] | Traffic Out [MB] | Disc Write [B] | Disc Read [B] |\n";
        out += "| --- | --- | --- | --- | --- | --- | --- | --- |\n";
        for (const resource_summary& s : r.processes) {
            out += "| " + s.name + (s.partial ? " (partial)" : "");
            out += " | " + fmt_fixed(s.cpu_max_pct, 2);
            out += " | " + fmt_fixed(s.cpu_avg_pct, 2);
            out += " | " + fmt_fixed(s.mem_max_mb, 1);
            out += " | " + fmt_fixed(s.mem_avg_mb, 1);
            out += " | " + fmt_fixed(s.traffic_in_mb, 4);
            out += " | " + fmt_fixed(s.traffic_out_mb, 4);
            out += " | " + fmt_fixed(s.disc_write_b, 2);
            out += " | " + fmt_fixed(s.disc_read_b, 2);
            out += " |\n";
        }
    }
    return out;
}

doc render_json(const std::vector<round_metrics>& rounds,
                const std::vector<round_resources>& resources) {
    doc rs = doc::array();
    for (const round_metrics& m : rounds) rs.push_back(m.to_doc());
    doc res = doc::array();
    for (const round_resources& r : resources) {
        doc procs = doc::array();
        for (const resource_summary& s : r.processes) procs.push_back(s.to_doc());
        res.push_back(doc{{"round", r.round}, {"processes", std::move(procs)}});
    }
    return doc{{"rounds", std::move(rs)}, {"resources", std::move(res)}};
}

}  // namespace devchain::bench
