#include "skolr/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "skolr/error.hpp"
#include "skolr/rng.hpp"

namespace skolr {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char magic[8] = {'S', 'K', 'O', 'L', 'R', 'C', 'K', '1'};

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::istream& in)
{
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("checkpoint truncated");
    return v;
}

void put_string(std::ostream& out, const std::string& s)
{
    put_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in)
{
    const std::uint64_t n = get_u64(in);
    if (n > (1u << 26)) throw FormatError("checkpoint string length out of range");
    std::string s(n, '\0');
    if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError("checkpoint truncated");
    return s;
}

void put_tensor(std::ostream& out, const std::string& name, const Tensor& t)
{
    put_string(out, name);
    put_u64(out, t.rank());
    for (std::size_t e : t.shape()) put_u64(out, e);
    out.write(reinterpret_cast<const char*>(t.storage().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
}

std::pair<std::string, Tensor> get_tensor(std::istream& in)
{
    std::string name = get_string(in);
    const std::uint64_t rank = get_u64(in);
    if (rank > 8) throw FormatError("tensor '" + name + "' has implausible rank");
    Shape shape(rank);
    std::uint64_t count = 1;
    for (auto& e : shape) {
        e = get_u64(in);
        count *= e;
    }
    if (count > (1ull << 32)) throw FormatError("tensor '" + name + "' too large");
    std::vector<double> data(count);
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(double))))
        throw FormatError("checkpoint truncated inside tensor '" + name + "'");
    return {std::move(name), Tensor(std::move(shape), std::move(data))};
}

std::map<std::string, std::string> config_fields(const ModelConfig& c)
{
    std::map<std::string, std::string> f;
    std::istringstream in(c.canonical());
    std::string item;
    while (std::getline(in, item, ';')) {
        const auto eq = item.find('=');
        f[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return f;
}

ModelConfig config_from_fields(const std::map<std::string, std::string>& f)
{
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = f.find(key);
        if (it == f.end()) throw FormatError("checkpoint header lacks config field '" + key + "'");
        return it->second;
    };
    auto as_size = [&](const std::string& key) { return static_cast<std::size_t>(std::stoull(get(key))); };
    ModelConfig c;
    c.lookback = as_size("L");
    c.horizon = as_size("T");
    c.branches = as_size("N");
    c.dynamic_dim = as_size("D");
    c.ffn_layers = as_size("M");
    c.patch = as_size("P");
    c.dropout = std::stod(get("dropout"));
    c.channels = as_size("C");
    return c;
}

}  // namespace

void require_compatible(const ModelConfig& stored, const ModelConfig& expected)
{
    const auto a = config_fields(stored);
    const auto b = config_fields(expected);
    for (const auto& [key, value] : a) {
        const auto it = b.find(key);
        if (it != b.end() && it->second != value)
            throw ConfigError("checkpoint config mismatch on field " + key + ": stored " + value + ", requested " +
                              it->second);
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
    out.write(magic, sizeof magic);

    std::ostringstream header;
    header << "config=" << ckpt.config.canonical() << '\n' << "config_hash=" << config_hash(ckpt.config) << '\n';
    for (const auto& [k, v] : ckpt.metadata) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
            throw ContractError("checkpoint metadata must be single-line key=value text: " + k);
        header << k << '=' << v << '\n';
    }
    put_string(out, header.str());

    const auto named = ckpt.params.named();
    put_u64(out, named.size() + ckpt.extras.size());
    for (const auto& [name, t] : named) put_tensor(out, name, *t);
    for (const auto& [name, t] : ckpt.extras) put_tensor(out, "extra." + name, t);
    if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<ModelConfig>& expected)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    char head[8];
    if (!in.read(head, sizeof head) || std::memcmp(head, magic, sizeof magic) != 0)
        throw FormatError("not a checkpoint file: " + path.string());

    Checkpoint ckpt;
    std::istringstream header(get_string(in));
    std::string line;
    bool have_config = false;
    while (std::getline(header, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("malformed checkpoint header line: " + line);
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "config") {
            std::map<std::string, std::string> fields;
            std::istringstream items(value);
            std::string item;
            while (std::getline(items, item, ';')) {
                const auto e = item.find('=');
                if (e == std::string::npos) throw FormatError("malformed config entry: " + item);
                fields[item.substr(0, e)] = item.substr(e + 1);
            }
            ckpt.config = config_from_fields(fields);
            have_config = true;
        } else if (key != "config_hash") {
            ckpt.metadata[key] = value;
        }
    }
    if (!have_config) throw FormatError("checkpoint header has no config");
    ckpt.config.validate();
    if (expected) require_compatible(ckpt.config, *expected);

    std::map<std::string, Tensor> tensors;
    const std::uint64_t count = get_u64(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        auto [name, t] = get_tensor(in);
        if (name.rfind("extra.", 0) == 0)
            ckpt.extras.emplace(name.substr(6), std::move(t));
        else
            tensors.emplace(std::move(name), std::move(t));
    }

    // Build the expected layout, then fill it by name so shape drift is caught.
    Rng rng(0);
    ckpt.params = SkolrParams::initialize(ckpt.config, rng);
    for (auto& [name, slot] : ckpt.params.named()) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw FormatError("checkpoint lacks parameter '" + name + "'");
        if (it->second.shape() != slot->shape())
            throw FormatError("parameter '" + name + "' has shape " + shape_string(it->second.shape()) + ", expected " +
                              shape_string(slot->shape()));
        *slot = std::move(it->second);
        tensors.erase(it);
    }
    if (!tensors.empty()) throw FormatError("checkpoint has unexpected tensor '" + tensors.begin()->first + "'");
    return ckpt;
}

}  // namespace skolr
