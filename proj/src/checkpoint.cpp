#include "dualre/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dualre/error.hpp"

namespace dualre {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'D', 'U', 'A', 'L', 'R', 'E', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("truncated checkpoint: " + path.string());
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  const ParamStore& store = model.params.store;
  nlohmann::json params = nlohmann::json::array();
  for (ParamId i = 0; i < store.size(); ++i)
    params.push_back({{"name", store.name(i)}, {"shape", store.value(i).shape()}});
  nlohmann::json header = {{"encoder", model.params.encoder},
                           {"model", model.params.config},
                           {"num_predicates", model.params.num_predicates},
                           {"description_max_len", model.description_max_len},
                           {"schema", model.schema.to_json()},
                           {"vocab", model.vocab.tokens()},
                           {"params", params}};
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint: " + path.string());
  os.write(kMagic, sizeof kMagic);
  put(os, kVersion);
  put(os, static_cast<std::uint64_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (ParamId i = 0; i < store.size(); ++i) {
    const auto& v = store.value(i).raw();
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!os) throw IoError("failed writing checkpoint: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw IoError("not a checkpoint file: " + path.string());
  const auto version = get<std::uint32_t>(is, path);
  if (version != kVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto len = get<std::uint64_t>(is, path);
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw IoError("truncated checkpoint: " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }

  ParamStore store;
  for (const auto& p : header.at("params")) {
    Tensor t(p.at("shape").get<Shape>(), 0.0);
    auto& v = t.raw();
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double))))
      throw IoError("truncated checkpoint data: " + path.string());
    store.add(p.at("name").get<std::string>(), std::move(t));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in checkpoint: " + path.string());

  Model m;
  m.params = bind_model(header.at("encoder").get<EncoderConfig>(), header.at("model").get<ModelConfig>(),
                        header.at("num_predicates").get<std::size_t>(), std::move(store));
  m.schema = PredicateSchema::from_json(header.at("schema"));
  m.vocab = Vocab(header.at("vocab").get<std::vector<std::string>>());
  m.description_max_len = header.at("description_max_len").get<std::size_t>();
  return m;
}

bool identical(const Model& a, const Model& b) {
  return a.params.encoder == b.params.encoder && a.params.config == b.params.config &&
         a.params.num_predicates == b.params.num_predicates && a.params.store == b.params.store &&
         a.schema == b.schema && a.vocab == b.vocab && a.description_max_len == b.description_max_len;
}

}  // namespace dualre
