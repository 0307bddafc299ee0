#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "graphsim/error.hpp"
#include "graphsim/model.hpp"

namespace graphsim {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'I', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  const char* take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw DataError(std::string("checkpoint truncated while reading ") + what);
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t uint(int width, const char* what) {
    const char* p = take(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    }
    return v;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(uint(4, what)); }
  std::uint64_t u64(const char* what) { return uint(8, what); }
  std::string str(std::size_t n, const char* what) { return std::string(take(n, what), n); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

nlohmann::json model_to_json(const ModelConfig& m) {
  return {{"feature_dim", m.feature_dim},
          {"spatial_hidden", m.spatial_hidden},
          {"graph_out", m.graph_out},
          {"graph_lstm", m.graph_lstm},
          {"ped_lstm", m.ped_lstm},
          {"ego_lstm", m.ego_lstm},
          {"attention_dim", m.attention_dim},
          {"adjacency", m.adjacency == AdjacencyNormalization::Symmetric ? "symmetric" : "none"},
          {"use_ped_dynamics", m.use_ped_dynamics},
          {"use_ego_dynamics", m.use_ego_dynamics},
          {"ped_fields", to_string(m.ped_fields)},
          {"ego_fields", to_string(m.ego_fields)},
          {"recenter_dynamics", m.recenter_dynamics},
          {"seed", m.seed}};
}

ModelConfig model_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.feature_dim = j.at("feature_dim").get<std::size_t>();
  m.spatial_hidden = j.at("spatial_hidden").get<std::size_t>();
  m.graph_out = j.at("graph_out").get<std::size_t>();
  m.graph_lstm = j.at("graph_lstm").get<std::size_t>();
  m.ped_lstm = j.at("ped_lstm").get<std::size_t>();
  m.ego_lstm = j.at("ego_lstm").get<std::size_t>();
  m.attention_dim = j.at("attention_dim").get<std::size_t>();
  m.adjacency = j.at("adjacency").get<std::string>() == "symmetric"
                    ? AdjacencyNormalization::Symmetric
                    : AdjacencyNormalization::None;
  m.use_ped_dynamics = j.at("use_ped_dynamics").get<bool>();
  m.use_ego_dynamics = j.at("use_ego_dynamics").get<bool>();
  m.ped_fields = parse_dynamics_fields(j.at("ped_fields").get<std::string>());
  m.ego_fields = parse_dynamics_fields(j.at("ego_fields").get<std::string>());
  m.recenter_dynamics = j.at("recenter_dynamics").get<bool>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json meta;
  meta["model"] = model_to_json(ckpt.model);
  meta["manifest"] = {{"max_speed", ckpt.manifest.max_speed},
                      {"max_length", ckpt.manifest.max_length},
                      {"max_width", ckpt.manifest.max_width},
                      {"d_thresh", ckpt.manifest.d_thresh},
                      {"fitted", ckpt.manifest.fitted}};
  meta["run_config"] = ckpt.run_config;
  const std::string blob = meta.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_u64(out, ckpt.config_hash);
  put_u64(out, blob.size());
  out += blob;
  put_u32(out, static_cast<std::uint32_t>(ckpt.parameters.size()));
  for (const auto& p : ckpt.parameters) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put_u32(out, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) put_u64(out, d);
    for (double v : p.value.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(8, "magic"), kMagic, 8) != 0) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.config_hash = r.u64("config hash");
  const std::uint64_t blob_len = r.u64("metadata length");
  const std::string blob = r.str(blob_len, "metadata");
  try {
    const auto meta = nlohmann::json::parse(blob);
    c.model = model_from_json(meta.at("model"));
    const auto& m = meta.at("manifest");
    c.manifest.max_speed = m.at("max_speed").get<double>();
    c.manifest.max_length = m.at("max_length").get<double>();
    c.manifest.max_width = m.at("max_width").get<double>();
    c.manifest.d_thresh = m.at("d_thresh").get<double>();
    c.manifest.fitted = m.at("fitted").get<bool>();
    c.run_config = meta.at("run_config").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint metadata: ") + e.what());
  }
  const std::uint32_t count = r.u32("parameter count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32("parameter name length");
    std::string name = r.str(name_len, "parameter name");
    const std::uint32_t rank = r.u32("parameter rank");
    std::vector<std::size_t> shape;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(static_cast<std::size_t>(r.u64("parameter shape")));
      n *= shape.back();
    }
    if (n > bytes.size()) throw DataError("checkpoint parameter '" + name + "' is oversized");
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<double>(r.u64("parameter values"));
    c.parameters.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw DataError("checkpoint has trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const std::string bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace graphsim
