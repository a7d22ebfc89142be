#include "condrnn/bench/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "condrnn/bench/metrics.hpp"
#include "condrnn/data/dataset.hpp"
#include "condrnn/error.hpp"
#include "condrnn/hash.hpp"

namespace condrnn::bench {

using nlohmann::json;

std::map<CellKey, Aggregate> aggregate(const BenchReport& report) {
    std::map<CellKey, Aggregate> out;
    for (const auto& c : report.cells) {
        auto& a = out[{c.variant, c.f_tr, c.f_te, c.mode}];
        if (!c.failure.empty()) {
            ++a.failures;
            continue;
        }
        a.values.push_back(c.value);
    }
    for (auto& [k, a] : out) {
        a.seeds = a.values.size();
        a.mean = mean(a.values);
        a.std = sample_std(a.values);
    }
    return out;
}

std::map<std::tuple<double, double, Mode>, double> welch_gru_cm_vs_gru(const BenchReport& report) {
    std::map<std::tuple<double, double, Mode>, double> out;
    const auto agg = aggregate(report);
    for (const auto& [k, a] : agg) {
        const auto& [variant, f_tr, f_te, mode] = k;
        if (variant != train::Variant::GruCm) continue;
        auto it = agg.find({train::Variant::Gru, f_tr, f_te, mode});
        if (it == agg.end()) continue;
        out[{f_tr, f_te, mode}] = welch_p_value(a.values, it->second.values);
    }
    return out;
}

namespace {

std::string pct(double f) {
    std::ostringstream os;
    os << std::llround(f * 100.0);
    return os.str();
}

std::string fmt_cell(const Aggregate& a) {
    if (a.seeds == 0) return "failed";
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << a.mean << "±" << a.std << " (n=" << a.seeds << ")";
    return os.str();
}

// Display width in code points.
std::size_t width(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

std::string pad(const std::string& s, std::size_t w) { return s + std::string(w > width(s) ? w - width(s) : 0, ' '); }

std::string fmt_p(double p) {
    if (std::isnan(p)) return "n/a";
    std::ostringstream os;
    os << std::setprecision(3) << p;
    return os.str();
}

} // namespace

void write_table(std::ostream& os, const BenchReport& report) {
    const auto agg = aggregate(report);
    std::set<double> f_trs;
    std::set<double> f_tes;
    std::set<Mode> modes;
    std::set<train::Variant> variants;
    bool has_all = false;
    for (const auto& [k, a] : agg) {
        const auto& [v, f_tr, f_te, mode] = k;
        variants.insert(v);
        if (v == train::Variant::GruA) {
            has_all = true;
            continue;
        }
        f_trs.insert(f_tr);
        f_tes.insert(f_te);
        modes.insert(mode);
    }

    struct Column {
        std::string header;
        double f_tr;
        double f_te;
        Mode mode;
    };
    std::vector<Column> columns;
    for (double f_tr : f_trs)
        for (Mode mode : modes)
            for (double f_te : f_tes)
                columns.push_back({to_string(mode) + " f_tr=" + pct(f_tr) + " f_te=" + pct(f_te), f_tr, f_te, mode});

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"variant"};
    for (const auto& c : columns) header.push_back(c.header);
    if (has_all) header.push_back("all sensors");
    rows.push_back(header);
    for (auto v : variants) {
        std::vector<std::string> row{train::to_string(v)};
        for (const auto& c : columns) {
            auto it = agg.find({v, c.f_tr, c.f_te, c.mode});
            row.push_back(v == train::Variant::GruA || it == agg.end() ? "-" : fmt_cell(it->second));
        }
        if (has_all) {
            auto it = agg.find({train::Variant::GruA, 0.0, 0.0, Mode::ZeroShot});
            row.push_back(v == train::Variant::GruA && it != agg.end() ? fmt_cell(it->second) : "-");
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], width(r[i]));

    const std::string metric = report.cells.empty() ? "" : report.cells.front().metric;
    os << "dataset " << report.dataset << "  digest " << report.data_digest << "  metric " << metric << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "  " : "") << pad(r[i], widths[i]);
        os << '\n';
    }
    const auto pvals = welch_gru_cm_vs_gru(report);
    if (!pvals.empty()) {
        os << "welch p-value gru-cm vs gru:";
        for (const auto& [k, p] : pvals) {
            const auto& [f_tr, f_te, mode] = k;
            os << ' ' << to_string(mode) << '/' << pct(f_tr) << '/' << pct(f_te) << '=' << fmt_p(p);
        }
        os << '\n';
    }
}

void write_jsonl(std::ostream& os, const BenchReport& report) {
    for (const auto& c : report.cells) {
        json j = {{"dataset", c.dataset}, {"variant", train::to_string(c.variant)},
                  {"f_tr", c.f_tr},       {"f_te", c.f_te},
                  {"mode", to_string(c.mode)}, {"seed", c.seed},
                  {"metric", c.metric},   {"value", c.failure.empty() ? json(c.value) : json(nullptr)},
                  {"runtime_s", c.runtime_s}};
        if (!c.failure.empty()) j["failure"] = c.failure;
        os << j.dump() << '\n';
    }
}

void write_csv(std::ostream& os, const BenchReport& report) {
    os << "dataset,variant,f_tr,f_te,mode,seed,metric,value,runtime_s\n";
    os << std::setprecision(17);
    for (const auto& c : report.cells) {
        os << c.dataset << ',' << train::to_string(c.variant) << ',' << c.f_tr << ',' << c.f_te << ','
           << to_string(c.mode) << ',' << c.seed << ',' << c.metric << ',';
        if (c.failure.empty()) os << c.value;
        os << ',' << c.runtime_s << '\n';
    }
}

void write_predictions(std::ostream& os, const BenchReport& report) {
    for (const auto& p : report.predictions) {
        os << json{{"variant", train::to_string(p.variant)},
                   {"f_tr", p.f_tr},
                   {"f_te", p.f_te},
                   {"mode", to_string(p.mode)},
                   {"seed", p.seed},
                   {"combination", p.combination},
                   {"instance", p.instance},
                   {"prediction", p.prediction},
                   {"target", p.target}}
                  .dump()
           << '\n';
    }
}

std::uint64_t report_digest(const BenchReport& report) {
    Fnv1a64 h;
    h.update_str(report.dataset);
    h.update_str(report.data_digest);
    h.update_str(report.config_echo);
    h.update_u64(report.cells.size());
    for (const auto& c : report.cells) {
        h.update_str(train::to_string(c.variant));
        h.update_f64(c.f_tr);
        h.update_f64(c.f_te);
        h.update_str(to_string(c.mode));
        h.update_u64(c.seed);
        h.update_str(c.metric);
        h.update_f64(c.failure.empty() ? c.value : 0.0);
        h.update_u64(c.combinations);
        h.update_str(c.failure);
    }
    return h.digest();
}

void save_report(const BenchReport& report, const std::filesystem::path& dir, bool csv) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream os(dir / name);
        if (!os) throw Error("cannot write " + (dir / name).string());
        return os;
    };
    {
        auto os = open("report.jsonl");
        write_jsonl(os, report);
    }
    if (csv) {
        auto os = open("report.csv");
        write_csv(os, report);
    }
    {
        auto os = open("predictions.jsonl");
        write_predictions(os, report);
    }
    {
        auto os = open("table.txt");
        write_table(os, report);
    }
    {
        auto os = open("config.txt");
        os << report.config_echo;
    }
    {
        auto os = open("digest.txt");
        os << data::hex_digest(report_digest(report)) << '\n';
    }
}

} // namespace condrnn::bench
