#include "vps/serialize.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vps {

namespace {

const char* dtype_name() { return sizeof(Real) == 4 ? "f32" : "f64"; }

void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

}  // namespace

void save_params(const std::string& path, std::span<const Param* const> params,
                 const nlohmann::json& meta) {
  nlohmann::json header;
  header["dtype"] = dtype_name();
  header["meta"] = meta;
  auto& tensors = header["tensors"] = nlohmann::json::array();

  size_t offset = 0;
  for (const Param* p : params) {
    tensors.push_back({{"name", p->name},
                       {"shape", p->shape},
                       {"offset", offset},
                       {"bytes", p->size() * sizeof(Real)}});
    offset += p->size() * sizeof(Real);
  }

  const std::string htext = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out.write(kWeightMagic, sizeof(kWeightMagic));
  const uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  const size_t pad = (8 - (sizeof(kWeightMagic) + 8 + htext.size()) % 8) % 8;
  const char zeros[8] = {};
  out.write(zeros, static_cast<std::streamsize>(pad));
  for (const Param* p : params) {
    out.write(reinterpret_cast<const char*>(p->w.data()),
              static_cast<std::streamsize>(p->size() * sizeof(Real)));
  }
  if (!out) fail(path, "write failed");
}

namespace {

nlohmann::json read_header(std::ifstream& in, const std::string& path,
                           size_t* data_start) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kWeightMagic, sizeof(magic)) != 0) {
    fail(path, "not a weight file (bad magic)");
  }
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) fail(path, "truncated header");
  *data_start = (sizeof(magic) + 8 + hlen + 7) / 8 * 8;
  return nlohmann::json::parse(htext);
}

}  // namespace

nlohmann::json load_params(const std::string& path, std::span<Param* const> params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  size_t data_start = 0;
  const auto header = read_header(in, path, &data_start);
  if (header.at("dtype").get<std::string>() != dtype_name()) {
    fail(path, "dtype mismatch: file has " + header.at("dtype").get<std::string>() +
                   ", build expects " + dtype_name());
  }
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) {
    fail(path, "tensor count mismatch: file has " + std::to_string(tensors.size()) +
                   ", model expects " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    Param* p = params[i];
    if (t.at("name").get<std::string>() != p->name) {
      fail(path, "tensor name mismatch at index " + std::to_string(i) + ": file has " +
                     t.at("name").get<std::string>() + ", model expects " + p->name);
    }
    if (t.at("shape").get<std::vector<int>>() != p->shape) {
      fail(path, "shape mismatch for " + p->name);
    }
    in.seekg(static_cast<std::streamoff>(data_start + t.at("offset").get<size_t>()));
    in.read(reinterpret_cast<char*>(p->w.data()),
            static_cast<std::streamsize>(p->size() * sizeof(Real)));
    if (!in) fail(path, "truncated data for " + p->name);
  }
  return header.at("meta");
}

nlohmann::json load_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  size_t data_start = 0;
  return read_header(in, path, &data_start).at("meta");
}

}  // namespace vps
