#include "train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "train/trainer.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian");

namespace kpfc {

namespace {
using nlohmann::json;

constexpr char kMagic[4] = {'K', 'P', 'F', 'C'};
constexpr uint16_t kVersion = 1;
constexpr uint64_t kAlign = 64;

uint64_t align_up(uint64_t v) { return (v + kAlign - 1) / kAlign * kAlign; }

json hyper_to_json(const ModelHyper& h) {
  return json{{"t_in", h.t_in},
              {"t_out", h.t_out},
              {"joints", h.joints},
              {"coords", h.coords},
              {"mlp_widths", h.mlp_widths},
              {"mlp_dropout", h.mlp_dropout},
              {"lstm_hidden", h.lstm_hidden},
              {"lstm_layers", h.lstm_layers},
              {"lstm_dropout", h.lstm_dropout},
              {"conv_channels", h.conv_channels},
              {"conv_kernel", h.conv_kernel},
              {"conv_padding", h.conv_padding},
              {"conv_dropout", h.conv_dropout},
              {"tf_dmodel", h.tf_dmodel},
              {"tf_heads", h.tf_heads},
              {"tf_layers", h.tf_layers},
              {"tf_ffn", h.tf_ffn},
              {"tf_dropout", h.tf_dropout}};
}

ModelHyper hyper_from_json(const json& j) {
  ModelHyper h;
  h.t_in = j.at("t_in").get<int>();
  h.t_out = j.at("t_out").get<int>();
  h.joints = j.at("joints").get<int>();
  h.coords = j.at("coords").get<int>();
  h.mlp_widths = j.at("mlp_widths").get<std::vector<int>>();
  h.mlp_dropout = j.at("mlp_dropout").get<double>();
  h.lstm_hidden = j.at("lstm_hidden").get<int>();
  h.lstm_layers = j.at("lstm_layers").get<int>();
  h.lstm_dropout = j.at("lstm_dropout").get<double>();
  h.conv_channels = j.at("conv_channels").get<std::vector<int>>();
  h.conv_kernel = j.at("conv_kernel").get<int>();
  h.conv_padding = j.at("conv_padding").get<int>();
  h.conv_dropout = j.at("conv_dropout").get<double>();
  h.tf_dmodel = j.at("tf_dmodel").get<int>();
  h.tf_heads = j.at("tf_heads").get<int>();
  h.tf_layers = j.at("tf_layers").get<int>();
  h.tf_ffn = j.at("tf_ffn").get<int>();
  h.tf_dropout = j.at("tf_dropout").get<double>();
  return h;
}

struct PayloadRef {
  std::string name;
  const float* data;
  Shape shape;
  bool learnable;
  int opt;  // 0 model tensor, 1 first moment, 2 second moment
};
}  // namespace

void save_checkpoint(const Model& model, const AdamState* state, const std::string& path) {
  std::vector<PayloadRef> payloads;
  const auto& entries = model.entries();
  for (const auto& e : entries)
    payloads.push_back({e.name, e.tensor.raw(), e.tensor.shape(), e.learnable, 0});
  if (state) {
    if (state->m.size() != entries.size())
      fail(ErrorCode::Contract, "save_checkpoint: optimizer state does not match parameter store");
    for (size_t i = 0; i < entries.size(); ++i) {
      if (!entries[i].learnable) continue;
      const Shape& shape = entries[i].tensor.shape();
      payloads.push_back({"opt.m." + entries[i].name, state->m[i].data(), shape, false, 1});
      payloads.push_back({"opt.v." + entries[i].name, state->v[i].data(), shape, false, 2});
    }
  }

  json table = json::array();
  uint64_t offset = 0;  // relative to payload base
  for (const auto& p : payloads) {
    const uint64_t nbytes = static_cast<uint64_t>(shape_numel(p.shape)) * sizeof(float);
    table.push_back(json{{"name", p.name},
                         {"dtype", "f32"},
                         {"shape", p.shape},
                         {"offset", offset},
                         {"nbytes", nbytes},
                         {"learnable", p.learnable},
                         {"opt", p.opt}});
    offset = align_up(offset + nbytes);
  }

  json header = {{"arch", arch_name(model.kind())},
                 {"hyper", hyper_to_json(model.hyper())},
                 {"adam_step", state ? state->t : int64_t{0}},
                 {"has_optimizer_state", state != nullptr},
                 {"tensors", table}};
  const std::string header_str = header.dump();
  if (header_str.size() > 0xffffffffULL) fail(ErrorCode::Contract, "checkpoint header too large");

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  const uint16_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const uint32_t header_len = static_cast<uint32_t>(header_str.size());
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

  const uint64_t payload_base = align_up(10 + header_str.size());
  uint64_t pos = 10 + header_str.size();
  const char zeros[kAlign] = {0};
  auto pad_to = [&](uint64_t target) {
    while (pos < target) {
      const uint64_t chunk = std::min<uint64_t>(kAlign, target - pos);
      out.write(zeros, static_cast<std::streamsize>(chunk));
      pos += chunk;
    }
  };
  for (size_t i = 0; i < payloads.size(); ++i) {
    const uint64_t rel = table[i].at("offset").get<uint64_t>();
    const uint64_t nbytes = table[i].at("nbytes").get<uint64_t>();
    pad_to(payload_base + rel);
    out.write(reinterpret_cast<const char*>(payloads[i].data), static_cast<std::streamsize>(nbytes));
    pos += nbytes;
  }
  if (!out) fail(ErrorCode::Io, "short write: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorCode::Format, "not a checkpoint file (bad magic): " + path);
  uint16_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != kVersion)
    fail(ErrorCode::Format, "unsupported checkpoint version " + std::to_string(version));
  uint32_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in) fail(ErrorCode::Corrupt, "truncated checkpoint header length");
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), header_len);
  if (!in) fail(ErrorCode::Corrupt, "truncated checkpoint header");

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    fail(ErrorCode::Corrupt, std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  LoadedCheckpoint loaded{
      Model::skeleton(arch_from_name(header.at("arch").get<std::string>()),
                      hyper_from_json(header.at("hyper"))),
      std::nullopt};
  const bool has_state = header.value("has_optimizer_state", false);
  if (has_state) {
    loaded.state.emplace();
    loaded.state->init_like(loaded.model);
    loaded.state->t = header.at("adam_step").get<int64_t>();
  }

  const uint64_t payload_base = align_up(10 + static_cast<uint64_t>(header_len));
  auto& entries = loaded.model.entries();
  size_t model_tensors_seen = 0;
  for (const auto& item : header.at("tensors")) {
    const std::string name = item.at("name").get<std::string>();
    const Shape shape = item.at("shape").get<Shape>();
    const uint64_t rel = item.at("offset").get<uint64_t>();
    const uint64_t nbytes = item.at("nbytes").get<uint64_t>();
    if (item.at("dtype").get<std::string>() != "f32")
      fail(ErrorCode::Format, "unsupported tensor dtype for " + name);
    if (nbytes != static_cast<uint64_t>(shape_numel(shape)) * sizeof(float))
      fail(ErrorCode::Corrupt, "tensor byte length disagrees with shape for " + name);
    const int opt = item.value("opt", 0);

    float* dst = nullptr;
    if (opt == 0) {
      if (!loaded.model.has_param(name))
        fail(ErrorCode::Corrupt, "checkpoint names unknown tensor " + name);
      auto& tensor = loaded.model.param(name);
      if (tensor.shape() != shape)
        fail(ErrorCode::Corrupt, "tensor shape mismatch for " + name);
      dst = tensor.raw();
      ++model_tensors_seen;
    } else {
      if (!loaded.state) fail(ErrorCode::Corrupt, "optimizer tensor without optimizer state: " + name);
      const std::string param_name = name.substr(6);  // strip "opt.m." / "opt.v."
      if (!loaded.model.has_param(param_name))
        fail(ErrorCode::Corrupt, "optimizer tensor names unknown parameter " + name);
      size_t idx = entries.size();
      for (size_t i = 0; i < entries.size(); ++i)
        if (entries[i].name == param_name) { idx = i; break; }
      auto& buf = opt == 1 ? loaded.state->m[idx] : loaded.state->v[idx];
      if (buf.size() != static_cast<size_t>(shape_numel(shape)))
        fail(ErrorCode::Corrupt, "optimizer tensor shape mismatch for " + name);
      dst = buf.data();
    }
    in.seekg(static_cast<std::streamoff>(payload_base + rel), std::ios::beg);
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(nbytes));
    if (!in) fail(ErrorCode::Corrupt, "truncated tensor payload for " + name);
  }
  if (model_tensors_seen != entries.size())
    fail(ErrorCode::Corrupt, "checkpoint is missing model tensors");
  return loaded;
}

}  // namespace kpfc
