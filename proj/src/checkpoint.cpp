#include "rldtf/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "rldtf/io.hpp"

namespace rldtf {

namespace {

constexpr char kMagic[8] = {'R', 'L', 'D', 'T', 'F', 'C', 'K', '1'};
static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian doubles");

json config_to_json(const ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size}, {"d_model", c.d_model},   {"n_layers", c.n_layers},
              {"n_heads", c.n_heads},       {"d_ff", c.d_ff},         {"max_len", c.max_len},
              {"split_backbone", c.split_backbone}, {"init_std", c.init_std}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.split_backbone = j.at("split_backbone").get<bool>();
  c.init_std = j.at("init_std").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params) {
  json tensors = json::array();
  for (const auto& t : params.layout->tensors())
    tensors.push_back(json{{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", t.offset}});
  const json header{{"config", config_to_json(params.config)},
                    {"version", params.version},
                    {"count", params.data.size()},
                    {"tensors", tensors}};
  const std::string h = header.dump();
  const std::uint64_t hlen = h.size();

  std::string blob;
  blob.reserve(sizeof kMagic + sizeof hlen + h.size() + params.data.size() * sizeof(double));
  blob.append(kMagic, sizeof kMagic);
  blob.append(reinterpret_cast<const char*>(&hlen), sizeof hlen);
  blob.append(h);
  blob.append(reinterpret_cast<const char*>(params.data.data()), params.data.size() * sizeof(double));
  write_file_atomic(path, blob);
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw CheckpointError("checkpoint not found: " + path.string());
  const std::string blob = read_file(path);
  const std::size_t pre = sizeof kMagic + sizeof(std::uint64_t);
  if (blob.size() < pre || std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0)
    throw CheckpointError("not a checkpoint: " + path.string());
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, blob.data() + sizeof kMagic, sizeof hlen);
  if (blob.size() < pre + hlen) throw CheckpointError("truncated checkpoint header: " + path.string());

  PolicyParams p;
  std::size_t count = 0;
  try {
    const json header = json::parse(blob.substr(pre, hlen));
    const ModelConfig cfg = config_from_json(header.at("config"));
    cfg.validate();
    p = init_params(cfg, 0);
    p.version = header.at("version").get<std::uint64_t>();
    count = header.at("count").get<std::size_t>();
    const auto& tensors = header.at("tensors");
    if (tensors.size() != p.layout->tensors().size()) throw CheckpointError("tensor table mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& spec = p.layout->tensors()[i];
      if (tensors[i].at("name").get<std::string>() != spec.name || tensors[i].at("rows").get<int>() != spec.rows ||
          tensors[i].at("cols").get<int>() != spec.cols || tensors[i].at("offset").get<std::size_t>() != spec.offset)
        throw CheckpointError("tensor layout mismatch at " + spec.name);
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid checkpoint config: ") + e.what());
  }
  if (count != p.data.size()) throw CheckpointError("parameter count mismatch");
  if (blob.size() != pre + hlen + count * sizeof(double)) throw CheckpointError("truncated checkpoint data");
  std::memcpy(p.data.data(), blob.data() + pre + hlen, count * sizeof(double));
  return p;
}

}  // namespace rldtf
