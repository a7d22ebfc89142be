#include "condrnn/data/dataset_io.hpp"

#include <fstream>
#include <map>
#include <json.hpp>

#include "condrnn/error.hpp"

namespace condrnn::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json record_of(const Dataset& ds, const TimeSeriesInstance& inst) {
    json r;
    r["id"] = inst.meta.id;
    std::vector<std::string> active;
    for (auto j : inst.active.indices()) active.push_back(ds.catalog.name(j));
    r["active"] = active;
    if (ds.task.kind == TaskKind::Classification) {
        r["target"] = inst.label;
    } else {
        r["target"] = inst.rul;
        r["total_life"] = inst.meta.total_life;
        r["offset"] = inst.meta.offset;
    }
    if (!inst.meta.source.empty()) r["source"] = inst.meta.source;
    json rows = json::array();
    for (std::size_t t = 0; t < inst.length(); ++t) {
        json row = json::array();
        for (std::size_t j = 0; j < inst.sensors(); ++j) row.push_back(inst.values.at(t, j));
        rows.push_back(std::move(row));
    }
    r["values"] = std::move(rows);
    return r;
}

TimeSeriesInstance parse_record(const Dataset& ds, const json& r, const std::string& where) {
    TimeSeriesInstance inst;
    const std::size_t d = ds.catalog.size();
    try {
        inst.meta.id = r.at("id").get<std::string>();
        std::vector<std::size_t> idx;
        for (const auto& name : r.at("active")) idx.push_back(ds.catalog.index_of(name.get<std::string>()));
        inst.active = ActiveSet::from_indices(d, idx);
        if (ds.task.kind == TaskKind::Classification) {
            const auto label = r.at("target").get<long long>();
            if (label < 0) throw IngestionError(where + ": negative class label");
            inst.label = static_cast<std::size_t>(label);
        } else {
            inst.rul = r.at("target").get<double>();
            inst.meta.total_life = r.value("total_life", 0.0);
            inst.meta.offset = r.value("offset", std::size_t{0});
        }
        inst.meta.source = r.value("source", std::string{});
        const auto& rows = r.at("values");
        if (!rows.is_array() || rows.empty()) throw IngestionError(where + ": 'values' must be a non-empty array");
        std::vector<double> data;
        data.reserve(rows.size() * d);
        for (std::size_t t = 0; t < rows.size(); ++t) {
            const auto& row = rows[t];
            if (!row.is_array() || row.size() != d) {
                throw IngestionError(where + ": row " + std::to_string(t) + " has " +
                                     std::to_string(row.is_array() ? row.size() : 0) + " columns, expected " +
                                     std::to_string(d));
            }
            for (const auto& v : row) data.push_back(v.is_null() ? 0.0 : v.get<double>());
        }
        inst.values = diff::Tensor(diff::Shape{rows.size(), d}, std::move(data));
    } catch (const IngestionError&) {
        throw;
    } catch (const std::exception& e) {
        throw IngestionError(where + ": " + e.what());
    }
    return inst;
}

} // namespace

void save_dataset(const Dataset& ds, const fs::path& dir, const std::optional<std::string>& reference) {
    fs::create_directories(dir);
    std::map<std::string, std::vector<const TimeSeriesInstance*>> by_split;
    for (const auto& inst : ds.instances) by_split[inst.meta.split.empty() ? "all" : inst.meta.split].push_back(&inst);

    json manifest;
    manifest["format"] = kManifestFormat;
    manifest["version"] = kManifestVersion;
    manifest["name"] = ds.name;
    manifest["sensors"] = ds.catalog.names();
    manifest["task"] = to_string(ds.task.kind);
    manifest["num_classes"] = ds.task.classes;
    manifest["normalization"] = to_string(ds.normalization);
    manifest["target_stats"] = ds.task.kind == TaskKind::Regression ? "train-minmax" : "none";
    if (reference) manifest["reference"] = *reference;
    json files = json::object();
    for (const auto& [tag, members] : by_split) {
        const std::string file = tag + ".jsonl";
        files[tag] = file;
        std::ofstream out(dir / file);
        if (!out) throw IngestionError("cannot write " + (dir / file).string());
        for (const auto* inst : members) out << record_of(ds, *inst).dump() << '\n';
    }
    manifest["files"] = files;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IngestionError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

Dataset load_dataset(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IngestionError("missing manifest: " + manifest_path.string());
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const std::exception& e) {
        throw IngestionError(manifest_path.string() + ": " + e.what());
    }

    Dataset ds;
    std::vector<std::pair<std::string, std::string>> files;
    try {
        if (manifest.value("format", std::string{}) != kManifestFormat) {
            throw IngestionError(manifest_path.string() + ": unexpected format tag");
        }
        if (manifest.value("version", 0) != kManifestVersion) {
            throw IngestionError(manifest_path.string() + ": unsupported manifest version");
        }
        ds.name = manifest.value("name", std::string{});
        ds.catalog = SensorCatalog(manifest.at("sensors").get<std::vector<std::string>>());
        ds.task.kind = parse_task(manifest.at("task").get<std::string>());
        ds.task.classes = manifest.value("num_classes", std::size_t{0});
        ds.normalization = parse_normalization(manifest.value("normalization", std::string{"zscore"}));
        for (const auto& [tag, file] : manifest.at("files").items()) files.emplace_back(tag, file.get<std::string>());
    } catch (const IngestionError&) {
        throw;
    } catch (const std::exception& e) {
        throw IngestionError(manifest_path.string() + ": " + e.what());
    }

    // Canonical split order so that instance order does not depend on JSON key order.
    auto rank = [](const std::string& tag) {
        static const std::map<std::string, int> order{{"all", 0}, {"train", 1}, {"val", 2}, {"finetune", 3}, {"test", 4}};
        auto it = order.find(tag);
        return it == order.end() ? 5 : it->second;
    };
    std::sort(files.begin(), files.end(), [&](const auto& a, const auto& b) {
        return std::make_pair(rank(a.first), a.first) < std::make_pair(rank(b.first), b.first);
    });

    for (const auto& [tag, file] : files) {
        const fs::path path = dir / file;
        std::ifstream rec(path);
        if (!rec) throw IngestionError("missing record file: " + path.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(rec, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const std::string where = path.string() + ":" + std::to_string(line_no);
            json r;
            try {
                r = json::parse(line);
            } catch (const std::exception& e) {
                throw IngestionError(where + ": malformed record: " + e.what());
            }
            auto inst = parse_record(ds, r, where);
            inst.meta.split = tag == "all" ? "" : tag;
            ds.instances.push_back(std::move(inst));
        }
    }
    ds.validate();
    if (manifest.contains("reference")) check_known_shape(ds, manifest["reference"].get<std::string>());
    return ds;
}

std::optional<KnownShape> known_shape(const std::string& reference) {
    if (reference == "DSADS") return KnownShape{45, TaskKind::Classification, 19, 9120};
    if (reference == "HAR") return KnownShape{9, TaskKind::Classification, 6, 10299};
    if (reference == "Turbofan") return KnownShape{21, TaskKind::Regression, 0, 519};
    return std::nullopt;
}

void check_known_shape(const Dataset& ds, const std::string& reference) {
    auto shape = known_shape(reference);
    if (!shape) throw IngestionError("unknown reference dataset '" + reference + "'");
    auto fail = [&](const std::string& what, std::size_t got, std::size_t want) {
        throw IngestionError(reference + " manifest: " + what + " = " + std::to_string(got) + ", expected " +
                             std::to_string(want));
    };
    if (ds.catalog.size() != shape->sensors) fail("d", ds.catalog.size(), shape->sensors);
    if (ds.task.kind != shape->task) throw IngestionError(reference + " manifest: wrong task kind");
    if (shape->task == TaskKind::Classification && ds.task.classes != shape->classes) {
        fail("K", ds.task.classes, shape->classes);
    }
    if (ds.size() != shape->instances) fail("N", ds.size(), shape->instances);
}

} // namespace condrnn::data
