#include "cseg/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

namespace cseg {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'C', 'S', 'E', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

json unet_json(const UNetConfig& c) {
  return {{"in_channels", c.in_channels}, {"levels", c.levels}, {"base_channels", c.base_channels},
          {"norm", std::string(norm_name(c.norm))}, {"aux_outputs", c.aux_outputs}};
}

UNetConfig unet_from_json(const json& j) {
  UNetConfig c;
  c.in_channels = j.at("in_channels").get<int>();
  c.levels = j.at("levels").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.norm = norm_from_name(j.at("norm").get<std::string>());
  c.aux_outputs = j.at("aux_outputs").get<int>();
  return c;
}

json cascade_json(const CascadeConfig& c) {
  return {{"levels", c.levels},
          {"base_channels", c.base_channels},
          {"norm", std::string(norm_name(c.norm))},
          {"train_gate", std::string(gate_name(c.train_gate))},
          {"infer_gate", std::string(gate_name(c.infer_gate))},
          {"gate_threshold", c.gate_threshold},
          {"steps", {unet_json(c.step_config(0)), unet_json(c.step_config(1)), unet_json(c.step_config(2))}}};
}

CascadeConfig cascade_from_json(const json& j) {
  CascadeConfig c;
  c.levels = j.at("levels").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.norm = norm_from_name(j.at("norm").get<std::string>());
  c.train_gate = gate_from_name(j.at("train_gate").get<std::string>());
  c.infer_gate = gate_from_name(j.at("infer_gate").get<std::string>());
  c.gate_threshold = j.at("gate_threshold").get<double>();
  c.validate();
  return c;
}

json parameter_table(const std::vector<Parameter*>& params) {
  json t = json::array();
  for (const auto* p : params) t.push_back({{"name", p->name}, {"size", p->value.size()}});
  return t;
}

void check_parameter_table(const json& table, const std::vector<Parameter*>& params) {
  if (table.size() != params.size()) throw Error("checkpoint: parameter count does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (table[i].at("name").get<std::string>() != params[i]->name ||
        table[i].at("size").get<std::size_t>() != params[i]->value.size()) {
      throw Error("checkpoint: parameter '" + params[i]->name + "' does not match the model");
    }
  }
}

template <class T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

void write_archive(const std::filesystem::path& path, const json& header, const std::vector<double>& payload) {
  const std::string h = header.dump();
  std::string body;
  body.reserve(h.size() + payload.size() * sizeof(double) + 16);
  put(body, static_cast<std::uint64_t>(h.size()));
  body += h;
  put(body, static_cast<std::uint64_t>(payload.size()));
  body.append(reinterpret_cast<const char*>(payload.data()), payload.size() * sizeof(double));
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("checkpoint: cannot write " + path.string());
    os.write(kMagic, sizeof(kMagic));
    os.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    os.write(body.data(), static_cast<std::streamsize>(body.size()));
    os.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
    if (!os) throw Error("checkpoint: write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

struct Archive {
  json header;
  std::vector<double> payload;
};

Archive read_archive(const std::filesystem::path& path, bool with_payload = true) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot read " + path.string());
  std::string raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string() + ": ";
  constexpr std::size_t kPrefix = sizeof(kMagic) + sizeof(kVersion);
  if (raw.size() < kPrefix + 20 || std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(where + "not a checkpoint file");
  }
  std::uint32_t version = 0;
  std::memcpy(&version, raw.data() + sizeof(kMagic), sizeof(version));
  if (version != kVersion) throw Error(where + "unsupported version " + std::to_string(version));

  const std::size_t body_size = raw.size() - kPrefix - sizeof(std::uint32_t);
  const char* body = raw.data() + kPrefix;
  std::uint32_t stored = 0;
  std::memcpy(&stored, body + body_size, sizeof(stored));
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body), static_cast<uInt>(body_size)));
  if (crc != stored) throw Error(where + "checksum mismatch (corrupt or truncated)");

  std::size_t pos = 0;
  auto take_u64 = [&] {
    if (pos + 8 > body_size) throw Error(where + "truncated");
    std::uint64_t v = 0;
    std::memcpy(&v, body + pos, 8);
    pos += 8;
    return v;
  };
  const auto hsize = take_u64();
  if (pos + hsize > body_size) throw Error(where + "truncated header");
  Archive a;
  try {
    a.header = json::parse(std::string_view(body + pos, hsize));
  } catch (const json::exception& e) {
    throw Error(where + "bad header: " + e.what());
  }
  pos += hsize;
  const auto n = take_u64();
  if (pos + n * sizeof(double) != body_size) throw Error(where + "payload size mismatch");
  if (with_payload) {
    a.payload.resize(n);
    std::memcpy(a.payload.data(), body + pos, n * sizeof(double));
  }
  return a;
}

void append_values(std::vector<double>& out, const std::vector<Parameter*>& params) {
  for (const auto* p : params) out.insert(out.end(), p->value.begin(), p->value.end());
}

std::size_t total_size(const std::vector<Parameter*>& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += p->value.size();
  return n;
}

TrainingState state_from_json(const json& j) {
  TrainingState s;
  s.epoch = j.at("epoch").get<int>();
  s.iteration = j.at("iteration").get<std::int64_t>();
  s.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
  s.rng_state = j.at("rng_state").get<std::string>();
  s.config_ini = j.at("config_ini").get<std::string>();
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, CascadeModel& model, Adam* optimizer,
                     const TrainingState& state) {
  const auto params = model.parameters();
  json header = {{"kind", "cascade"},
                 {"cascade", cascade_json(model.config())},
                 {"parameters", parameter_table(params)},
                 {"optimizer", optimizer != nullptr},
                 {"adam_steps", optimizer ? optimizer->steps() : 0},
                 {"state",
                  {{"epoch", state.epoch},
                   {"iteration", state.iteration},
                   {"epoch_losses", state.epoch_losses},
                   {"rng_state", state.rng_state},
                   {"config_ini", state.config_ini}}}};
  std::vector<double> payload;
  payload.reserve(total_size(params) * (optimizer ? 3 : 1));
  append_values(payload, params);
  if (optimizer) {
    for (const auto& m : optimizer->first_moments()) payload.insert(payload.end(), m.begin(), m.end());
    for (const auto& v : optimizer->second_moments()) payload.insert(payload.end(), v.begin(), v.end());
  }
  write_archive(path, header, payload);
}

TrainingState load_checkpoint(const std::filesystem::path& path, CascadeModel& model, Adam* optimizer) {
  const Archive a = read_archive(path);
  try {
    if (a.header.at("kind") != "cascade") throw Error("checkpoint: not a cascade checkpoint");
    const CascadeConfig stored = cascade_from_json(a.header.at("cascade"));
    if (!(stored == model.config())) {
      throw Error("checkpoint: cascade configuration mismatch (stored " + a.header.at("cascade").dump() +
                  ", model " + cascade_json(model.config()).dump() + ")");
    }
    const auto params = model.parameters();
    check_parameter_table(a.header.at("parameters"), params);
    const std::size_t n = total_size(params);
    const bool has_opt = a.header.at("optimizer").get<bool>();
    if (a.payload.size() != n * (has_opt ? 3 : 1)) throw Error("checkpoint: payload size mismatch");
    if (optimizer && !has_opt) throw Error("checkpoint: no optimizer state stored");

    std::size_t pos = 0;
    for (auto* p : params) {
      std::copy_n(a.payload.begin() + static_cast<std::ptrdiff_t>(pos), p->value.size(), p->value.begin());
      pos += p->value.size();
    }
    if (optimizer) {
      for (auto* buffers : {&optimizer->first_moments(), &optimizer->second_moments()}) {
        if (buffers->size() != params.size()) throw Error("checkpoint: optimizer does not match the model");
        for (auto& b : *buffers) {
          std::copy_n(a.payload.begin() + static_cast<std::ptrdiff_t>(pos), b.size(), b.begin());
          pos += b.size();
        }
      }
      optimizer->set_steps(a.header.at("adam_steps").get<std::int64_t>());
    }
    return state_from_json(a.header.at("state"));
  } catch (const json::exception& e) {
    throw Error("checkpoint: malformed header: " + std::string(e.what()));
  }
}

CascadeConfig checkpoint_config(const std::filesystem::path& path, TrainingState* state) {
  const Archive a = read_archive(path, false);
  try {
    if (a.header.at("kind") != "cascade") throw Error("checkpoint: not a cascade checkpoint");
    if (state) *state = state_from_json(a.header.at("state"));
    return cascade_from_json(a.header.at("cascade"));
  } catch (const json::exception& e) {
    throw Error("checkpoint: malformed header: " + std::string(e.what()));
  }
}

CascadeModel load_model(const std::filesystem::path& path, TrainingState* state) {
  CascadeModel model(checkpoint_config(path), 0);
  TrainingState s = load_checkpoint(path, model);
  if (state) *state = std::move(s);
  return model;
}

void save_unet(const std::filesystem::path& path, UNet& net) {
  const auto params = net.parameters();
  json header = {{"kind", "unet"}, {"unet", unet_json(net.config())}, {"parameters", parameter_table(params)}};
  std::vector<double> payload;
  append_values(payload, params);
  write_archive(path, header, payload);
}

void load_unet(const std::filesystem::path& path, UNet& net) {
  const Archive a = read_archive(path);
  try {
    if (a.header.at("kind") != "unet") throw Error("checkpoint: not a single-network checkpoint");
    if (!(unet_from_json(a.header.at("unet")) == net.config())) {
      throw Error("checkpoint: network configuration mismatch (stored " + a.header.at("unet").dump() + ")");
    }
    const auto params = net.parameters();
    check_parameter_table(a.header.at("parameters"), params);
    if (a.payload.size() != total_size(params)) throw Error("checkpoint: payload size mismatch");
    std::size_t pos = 0;
    for (auto* p : params) {
      std::copy_n(a.payload.begin() + static_cast<std::ptrdiff_t>(pos), p->value.size(), p->value.begin());
      pos += p->value.size();
    }
  } catch (const json::exception& e) {
    throw Error("checkpoint: malformed header: " + std::string(e.what()));
  }
}

}  // namespace cseg
