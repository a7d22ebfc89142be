#include "condrnn/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "condrnn/error.hpp"
#include "condrnn/hash.hpp"

namespace condrnn::train {

namespace {

constexpr char kMagic[8] = {'C', 'O', 'N', 'D', 'R', 'N', 'N', '1'};

std::uint32_t variant_tag(Variant v) { return static_cast<std::uint32_t>(v); }

Variant variant_from_tag(std::uint32_t tag) {
    if (tag > static_cast<std::uint32_t>(Variant::GruA)) throw CheckpointError("unknown variant tag");
    return static_cast<Variant>(tag);
}

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(const void* p, std::size_t n) {
        auto b = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    void entry(const std::string& key, const diff::Tensor& t) {
        u32(static_cast<std::uint32_t>(key.size()));
        bytes(key.data(), key.size());
        u32(static_cast<std::uint32_t>(t.rank()));
        for (auto e : t.shape()) u64(e);
        for (double v : t.data()) f64(v);
    }
    std::vector<std::uint8_t> buf;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
    void need(std::size_t n) const {
        if (pos_ + n > b_.size()) throw CheckpointError("checkpoint truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }

private:
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

diff::Tensor vec(const std::vector<double>& v) { return diff::Tensor::vector(v); }

diff::Tensor text_tensor(const std::string& s) {
    // One byte per element keeps text inside the uniform f64 entry layout.
    std::vector<double> v;
    v.reserve(s.size());
    for (unsigned char c : s) v.push_back(static_cast<double>(c));
    const std::size_t n = v.size();
    return diff::Tensor(diff::Shape{n}, std::move(v));
}

std::string tensor_text(const diff::Tensor& t) {
    std::string s;
    for (double v : t.data()) s.push_back(static_cast<char>(static_cast<unsigned char>(v)));
    return s;
}

std::string catalog_text(const cond::SensorCatalog& c) {
    std::string s;
    for (const auto& n : c.names()) {
        s += n;
        s.push_back('\n');
    }
    return s;
}

cond::SensorCatalog catalog_from_text(const std::string& s) {
    std::vector<std::string> names;
    std::size_t start = 0;
    while (start < s.size()) {
        auto end = s.find('\n', start);
        if (end == std::string::npos) end = s.size();
        names.push_back(s.substr(start, end - start));
        start = end + 1;
    }
    return cond::SensorCatalog(std::move(names));
}

std::map<std::string, diff::Tensor> meta_entries(const Checkpoint& c) {
    std::map<std::string, diff::Tensor> m;
    const auto& mc = c.model;
    m["meta.model"] = diff::Tensor::vector({static_cast<double>(mc.sensors),
                                            mc.task == dyn::TaskKind::Classification ? 0.0 : 1.0,
                                            static_cast<double>(mc.classes), static_cast<double>(mc.embedding_width),
                                            static_cast<double>(mc.gru_layers), static_cast<double>(mc.hidden),
                                            static_cast<double>(mc.head_layers),
                                            static_cast<double>(mc.cond_hidden_layers),
                                            static_cast<double>(mc.cond_hidden_width), mc.dropout, mc.leaky_slope});
    m["meta.catalog"] = text_tensor(catalog_text(c.catalog));
    m["meta.config"] = text_tensor(c.config_echo);
    m["meta.training"] = diff::Tensor::vector({c.best_val_loss, static_cast<double>(c.epoch)});
    m["meta.stats.mode"] = diff::Tensor::scalar(c.stats.mode == data::Normalization::ZScore ? 0.0 : 1.0);
    m["meta.stats.mean"] = vec(c.stats.mean);
    m["meta.stats.std"] = vec(c.stats.std);
    m["meta.stats.min"] = vec(c.stats.min);
    m["meta.stats.max"] = vec(c.stats.max);
    m["meta.stats.target"] = diff::Tensor::vector({c.stats.target_min, c.stats.target_max});
    return m;
}

const diff::Tensor& need_entry(const std::map<std::string, diff::Tensor>& m, const std::string& key,
                               std::size_t size) {
    auto it = m.find(key);
    if (it == m.end()) throw CheckpointError("checkpoint lacks entry '" + key + "'");
    if (size != 0 && it->second.size() != size) throw CheckpointError("checkpoint entry '" + key + "' malformed");
    return it->second;
}

} // namespace

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    w.u32(variant_tag(ckpt.variant));
    w.u64(ckpt.catalog.digest());
    const auto meta = meta_entries(ckpt);
    w.u32(static_cast<std::uint32_t>(meta.size() + ckpt.params.size()));
    for (const auto& [k, t] : meta) w.entry(k, t);
    for (const auto& [k, t] : ckpt.params) w.entry(k, t);
    w.u64(fnv1a64(w.buf));
    return std::move(w.buf);
}

Checkpoint deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof kMagic + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw CheckpointError("not a checkpoint (bad magic)");
    }
    const std::size_t body = bytes.size() - 8;
    Reader tail(bytes.subspan(body));
    if (tail.u64() != fnv1a64(bytes.first(body))) throw CheckpointError("checkpoint digest mismatch (corrupted file)");

    Reader r(bytes.first(body));
    r.str(sizeof kMagic);
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
        throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint c;
    c.variant = variant_from_tag(r.u32());
    const std::uint64_t catalog_digest = r.u64();
    const std::uint32_t n = r.u32();
    std::map<std::string, diff::Tensor> entries;
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::string key = r.str(r.u32());
        const std::uint32_t rank = r.u32();
        if (rank > 8) throw CheckpointError("implausible tensor rank in entry '" + key + "'");
        diff::Shape shape(rank);
        for (auto& e : shape) e = r.u64();
        const std::size_t count = diff::shape_size(shape);
        r.need(count * 8);
        std::vector<double> data(count);
        for (auto& v : data) v = r.f64();
        entries.emplace(key, diff::Tensor(std::move(shape), std::move(data)));
    }
    if (r.pos() != body) throw CheckpointError("trailing bytes before checkpoint digest");

    const auto& m = need_entry(entries, "meta.model", 11);
    c.model.sensors = static_cast<std::size_t>(m[0]);
    c.model.task = m[1] == 0.0 ? dyn::TaskKind::Classification : dyn::TaskKind::Regression;
    c.model.classes = static_cast<std::size_t>(m[2]);
    c.model.embedding_width = static_cast<std::size_t>(m[3]);
    c.model.gru_layers = static_cast<std::size_t>(m[4]);
    c.model.hidden = static_cast<std::size_t>(m[5]);
    c.model.head_layers = static_cast<std::size_t>(m[6]);
    c.model.cond_hidden_layers = static_cast<std::size_t>(m[7]);
    c.model.cond_hidden_width = static_cast<std::size_t>(m[8]);
    c.model.dropout = m[9];
    c.model.leaky_slope = m[10];
    c.catalog = catalog_from_text(tensor_text(need_entry(entries, "meta.catalog", 0)));
    if (c.catalog.digest() != catalog_digest) throw CheckpointError("catalog digest mismatch");
    c.config_echo = tensor_text(need_entry(entries, "meta.config", 0));
    const auto& tr = need_entry(entries, "meta.training", 2);
    c.best_val_loss = tr[0];
    c.epoch = static_cast<std::size_t>(tr[1]);
    const std::size_t d = c.model.sensors;
    c.stats.mode = need_entry(entries, "meta.stats.mode", 1)[0] == 0.0 ? data::Normalization::ZScore
                                                                         : data::Normalization::MinMax;
    auto as_vec = [](const diff::Tensor& t) { return std::vector<double>(t.data().begin(), t.data().end()); };
    c.stats.mean = as_vec(need_entry(entries, "meta.stats.mean", d));
    c.stats.std = as_vec(need_entry(entries, "meta.stats.std", d));
    c.stats.min = as_vec(need_entry(entries, "meta.stats.min", d));
    c.stats.max = as_vec(need_entry(entries, "meta.stats.max", d));
    const auto& tg = need_entry(entries, "meta.stats.target", 2);
    c.stats.target_min = tg[0];
    c.stats.target_max = tg[1];
    for (auto& [k, t] : entries)
        if (k.rfind("meta.", 0) != 0) c.params.emplace(k, std::move(t));
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto bytes = serialize(ckpt);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<Variant> expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Checkpoint c = deserialize(bytes);
    if (expected && c.variant != *expected) {
        throw CheckpointError("checkpoint " + path.string() + " holds variant " + to_string(c.variant) +
                              ", expected " + to_string(*expected));
    }
    return c;
}

std::uint64_t checkpoint_digest(const Checkpoint& ckpt) { return fnv1a64(serialize(ckpt)); }

Model instantiate(const Checkpoint& ckpt) {
    Model model(ckpt.variant, ckpt.model, 0);
    model.load_state(ckpt.params);
    return model;
}

Checkpoint snapshot(const Model& model, const cond::SensorCatalog& catalog, const data::NormStats& stats) {
    Checkpoint c;
    c.variant = model.variant();
    c.model = model.config();
    c.catalog = catalog;
    c.stats = stats;
    c.params = model.state();
    return c;
}

} // namespace condrnn::train
