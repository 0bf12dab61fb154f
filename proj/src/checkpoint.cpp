// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/checkpoint.hpp"

#include <map>

#include "binio.hpp"
#include "grass/error.hpp"

namespace grass {

namespace {

constexpr char kMagic[4] = {'G', 'R', 'C', 'K'};
constexpr ErrorKind kBad = ErrorKind::data;

void put_string(binio::Writer& w, const std::string& s) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
  w.raw(s.data(), s.size());
}

std::string get_string(binio::Reader& r) {
  const auto len = r.get<std::uint32_t>();
  r.expect(len, 1, "string");
  std::string s(len, '\0');
  r.take(s.data(), len);
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, GrassModel& model) {
  std::vector<std::pair<std::string, const Mat*>> sections;
  model.visit([&](const std::string& name, Param& p) { sections.emplace_back(name, &p.value); });
  model.visit_buffers([&](const std::string& name, Mat& m) { sections.emplace_back(name, &m); });

  binio::Writer w;
  w.raw(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  put_string(w, to_json(model.config(), -1));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, m] : sections) {
    put_string(w, name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m->rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m->cols()));
    w.raw(m->data(), static_cast<std::size_t>(m->size()) * sizeof(double));
  }
  binio::commit(path, w);
}

GrassModel load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(kBad, "checkpoint '" + path.string() + "' not found");
  const std::vector<char> bytes = binio::slurp(path, kBad);
  const std::size_t body = binio::check_crc(bytes, kBad);
  binio::Reader r(bytes.data(), body, kBad);
  char magic[4];
  r.take(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) fail(kBad, "'" + path.string() + "' is not a checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) fail(kBad, "unsupported checkpoint version " + std::to_string(version));
  GrassModel model(parse_config(get_string(r)));

  std::map<std::string, Mat> stored;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t s = 0; s < count; ++s) {
    std::string name = get_string(r);
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    r.expect(static_cast<std::uint64_t>(rows) * cols, sizeof(double), "section");
    Mat m(rows, cols);
    r.take(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    stored.emplace(std::move(name), std::move(m));
  }
  if (r.remaining() != 0) fail(kBad, "trailing bytes in checkpoint");

  std::size_t used = 0;
  auto assign = [&](const std::string& name, Mat& dst) {
    const auto it = stored.find(name);
    if (it == stored.end()) fail(kBad, "checkpoint lacks section '" + name + "'");
    if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols()) {
      fail(kBad, "checkpoint section '" + name + "' has the wrong shape");
    }
    dst = it->second;
    ++used;
  };
  model.visit([&](const std::string& name, Param& p) {
    assign(name, p.value);
    p.zero_grad();
  });
  model.visit_buffers(assign);
  if (used != stored.size()) fail(kBad, "checkpoint has sections the model does not use");
  return model;
}

}  // namespace grass
