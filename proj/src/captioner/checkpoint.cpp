#include "vlgen/captioner/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "vlgen/error.hpp"

namespace vlgen::captioner {

namespace {

constexpr char kMagic[] = "VLGENCKPT1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw SchemaError("checkpoint: truncated header length");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const CaptionerModel& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["config"] = model.config().to_json();
  header["vocabulary"] = model.vocab().to_json();
  header["seed"] = model.config().seed;
  auto& tensors = header["tensors"] = nlohmann::json::array();
  for (const nn::Parameter* p : model.params().all())
    tensors.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()},
                       {"trainable", p->trainable}});
  const std::string text = header.dump();

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(kMagic, kMagicLen);
    write_u64(out, text.size());
    out.write(text.data(), std::streamsize(text.size()));
    for (const nn::Parameter* p : model.params().all())
      out.write(reinterpret_cast<const char*>(p->value.data()), std::streamsize(p->value.size() * sizeof(double)));
    if (!out.flush()) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<CaptionerModel> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[kMagicLen];
  if (!in.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0)
    throw SchemaError("checkpoint: bad magic in " + path.string());
  const std::uint64_t len = read_u64(in);
  if (len > (1ULL << 32)) throw SchemaError("checkpoint: implausible header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), std::streamsize(len))) throw SchemaError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint: header: ") + e.what());
  }
  auto config = CaptionerConfig::from_json(header.at("config"));
  auto model = std::make_unique<CaptionerModel>(config, Vocabulary::from_json(header.at("vocabulary")));
  const auto& tensors = header.at("tensors");
  if (tensors.size() != model->params().size())
    throw SchemaError("checkpoint: " + std::to_string(tensors.size()) + " tensors, model has " +
                      std::to_string(model->params().size()));
  for (const auto& t : tensors) {
    const std::string name = t.at("name").get<std::string>();
    if (!model->params().contains(name)) throw SchemaError("checkpoint: unknown tensor " + name);
    nn::Parameter& p = model->params().get(name);
    if (p.value.rows() != t.at("rows").get<Eigen::Index>() || p.value.cols() != t.at("cols").get<Eigen::Index>())
      throw SchemaError("checkpoint: shape mismatch for " + name);
    if (!in.read(reinterpret_cast<char*>(p.value.data()), std::streamsize(p.value.size() * sizeof(double))))
      throw SchemaError("checkpoint: truncated data for " + name);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw SchemaError("checkpoint: trailing bytes");
  return model;
}

}  // namespace vlgen::captioner
