#include "fragscope/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fragscope/errors.hpp"

namespace fragscope::io {
namespace {

constexpr std::string_view kMagic = "EMBF";
constexpr std::uint8_t kVersion = 0x01;
constexpr std::size_t kHeaderBytes = 4 + 1 + 4 + 4;

std::uint32_t read_u32_le(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[at + static_cast<std::size_t>(i)]);
  return v;
}

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto l : split(text, '\n')) {
    l = trim(l);
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

double parse_number(std::string_view s, std::size_t line_no) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

factor::DiscreteDistribution distribution_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("symbols") || !j.contains("mass")) {
    throw ParseError(where + ": expected an object with 'symbols' and 'mass'");
  }
  try {
    return factor::DiscreteDistribution(j.at("symbols").get<std::vector<std::string>>(),
                                        j.at("mass").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

json distribution_to_json(const factor::DiscreteDistribution& d) {
  return json{{"symbols", std::vector<std::string>(d.support().begin(), d.support().end())},
              {"mass", std::vector<double>(d.mass().begin(), d.mass().end())}};
}

}  // namespace

std::string read_file(const fs::path& path) {
  if (!fs::exists(path)) throw FileNotFoundError("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

embedding::EmbeddingSet parse_embf(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes || bytes.substr(0, 4) != kMagic) {
    throw ParseError("EMBF: missing magic bytes");
  }
  if (static_cast<std::uint8_t>(bytes[4]) != kVersion) {
    throw ParseError("EMBF: unsupported version " + std::to_string(static_cast<int>(static_cast<std::uint8_t>(bytes[4]))));
  }
  const std::size_t n = read_u32_le(bytes, 5);
  const std::size_t d = read_u32_le(bytes, 9);
  if (bytes.size() != kHeaderBytes + 4 * n * d) {
    throw ParseError("EMBF: expected " + std::to_string(kHeaderBytes + 4 * n * d) + " bytes, got " +
                     std::to_string(bytes.size()));
  }
  std::vector<double> values(n * d);
  for (std::size_t i = 0; i < n * d; ++i) {
    values[i] = static_cast<double>(std::bit_cast<float>(read_u32_le(bytes, kHeaderBytes + 4 * i)));
  }
  try {
    return embedding::EmbeddingSet(n, d, std::move(values));
  } catch (const ValidationError& e) {
    throw ParseError(std::string("EMBF: ") + e.what());
  }
}

std::string serialize_embf(const embedding::EmbeddingSet& e) {
  std::string out(kMagic);
  out.push_back(static_cast<char>(kVersion));
  append_u32_le(out, static_cast<std::uint32_t>(e.rows()));
  append_u32_le(out, static_cast<std::uint32_t>(e.cols()));
  for (double v : e.values()) append_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

embedding::EmbeddingSet parse_embedding_csv(std::string_view text) {
  const auto ls = lines(text);
  if (ls.empty()) throw ParseError("embedding CSV: empty file");
  const auto header = split(ls[0], ',');
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (trim(header[k]) != "f" + std::to_string(k)) {
      throw ParseError("embedding CSV: header column " + std::to_string(k) + " must be f" + std::to_string(k));
    }
  }
  const std::size_t d = header.size();
  std::vector<double> values;
  for (std::size_t r = 1; r < ls.size(); ++r) {
    const auto cells = split(ls[r], ',');
    if (cells.size() != d) {
      throw ParseError("embedding CSV line " + std::to_string(r + 1) + ": expected " + std::to_string(d) + " values");
    }
    for (auto c : cells) values.push_back(parse_number(c, r + 1));
  }
  if (ls.size() < 2) throw ParseError("embedding CSV: no rows");
  try {
    return embedding::EmbeddingSet(ls.size() - 1, d, std::move(values));
  } catch (const ValidationError& e) {
    throw ParseError(std::string("embedding CSV: ") + e.what());
  }
}

std::string serialize_embedding_csv(const embedding::EmbeddingSet& e) {
  std::string out;
  for (std::size_t k = 0; k < e.cols(); ++k) out += (k ? ",f" : "f") + std::to_string(k);
  out += '\n';
  for (std::size_t i = 0; i < e.rows(); ++i) {
    const auto r = e.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) out += ',';
      out += format_double(r[k]);
    }
    out += '\n';
  }
  return out;
}

embedding::EmbeddingSet load_embeddings(const fs::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 4 && std::string_view(bytes).substr(0, 4) == kMagic) return parse_embf(bytes);
  return parse_embedding_csv(bytes);
}

embedding::Partition parse_partition_csv(std::string_view text, std::size_t rows) {
  const auto ls = lines(text);
  if (ls.empty()) throw ParseError("partition CSV: empty file");
  const auto header = split(ls[0], ',');
  if (header.size() != 2 || trim(header[0]) != "index" || trim(header[1]) != "subdataset") {
    throw ParseError("partition CSV: header must be 'index,subdataset'");
  }
  std::vector<std::optional<std::string>> labels(rows);
  for (std::size_t r = 1; r < ls.size(); ++r) {
    const auto cells = split(ls[r], ',');
    if (cells.size() != 2) throw ParseError("partition CSV line " + std::to_string(r + 1) + ": expected 2 fields");
    const double idx = parse_number(cells[0], r + 1);
    if (idx < 0 || idx != static_cast<double>(static_cast<std::size_t>(idx)) ||
        static_cast<std::size_t>(idx) >= rows) {
      throw ParseError("partition CSV line " + std::to_string(r + 1) + ": index out of range");
    }
    auto& slot = labels[static_cast<std::size_t>(idx)];
    if (slot) throw ParseError("partition CSV: row " + std::string(trim(cells[0])) + " labelled twice");
    const auto label = trim(cells[1]);
    if (label.empty()) throw ParseError("partition CSV line " + std::to_string(r + 1) + ": empty label");
    slot = std::string(label);
  }
  std::vector<std::string> out;
  out.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!labels[i]) throw ParseError("partition CSV: row " + std::to_string(i) + " has no label");
    out.push_back(std::move(*labels[i]));
  }
  return embedding::Partition(std::move(out));
}

std::string serialize_partition_csv(const embedding::Partition& p) {
  std::string out = "index,subdataset\n";
  for (std::size_t i = 0; i < p.size(); ++i) out += std::to_string(i) + "," + p.labels()[i] + "\n";
  return out;
}

embedding::Partition load_partition(const fs::path& path, std::size_t rows) {
  return parse_partition_csv(read_file(path), rows);
}

factor::MixtureModel mixture_from_json(const json& j) {
  if (!j.is_object() || !j.contains("components") || !j.at("components").is_array()) {
    throw ParseError("mixture: expected an object with a 'components' array");
  }
  std::vector<factor::SubDatasetFactors> comps;
  std::size_t i = 0;
  for (const auto& c : j.at("components")) {
    const std::string where = "components[" + std::to_string(i++) + "]";
    if (!c.is_object() || !c.contains("u") || !c.contains("v")) {
      throw ParseError(where + ": expected 'u' and 'v'");
    }
    comps.push_back({distribution_from_json(c.at("u"), where + ".u"),
                     distribution_from_json(c.at("v"), where + ".v")});
  }
  return factor::MixtureModel(std::move(comps));
}

json mixture_to_json(const factor::MixtureModel& mix) {
  json comps = json::array();
  for (const auto& c : mix.components()) {
    comps.push_back({{"u", distribution_to_json(c.u)}, {"v", distribution_to_json(c.v)}});
  }
  return json{{"components", comps}};
}

factor::MixtureModel load_mixture(const fs::path& path) {
  const auto text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return mixture_from_json(doc);
}

std::optional<bridge::BridgeSpec> bridge_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("bridge")) return std::nullopt;
  const auto& b = doc.at("bridge");
  try {
    bridge::BridgeSpec spec;
    spec.factor = factor::parse_factor(b.at("factor").get<std::string>());
    spec.bridge_symbols = b.at("symbols").get<std::vector<std::string>>();
    spec.epsilon = b.value("epsilon", 0.0);
    return spec;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bridge: ") + e.what());
  }
}

json bridge_to_json(const bridge::BridgeSpec& spec) {
  return json{{"factor", std::string(factor::to_string(spec.factor))},
              {"symbols", spec.bridge_symbols},
              {"epsilon", spec.epsilon}};
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

}  // namespace fragscope::io
