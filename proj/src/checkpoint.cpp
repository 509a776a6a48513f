#include "denselm/checkpoint.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace denselm {

namespace {

constexpr const char* kMagic = "denselm-checkpoint v1";
constexpr const char* kGateNote = "lstm_gate_order=i,f,g,o";

std::string dbl(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

void CheckpointWriter::field(const std::string& key, const std::string& value) {
  header_.emplace_back(key, value);
}
void CheckpointWriter::field(const std::string& key, long long value) {
  header_.emplace_back(key, std::to_string(value));
}
void CheckpointWriter::field(const std::string& key, uint64_t value) {
  header_.emplace_back(key, std::to_string(value));
}
void CheckpointWriter::field(const std::string& key, double value) {
  header_.emplace_back(key, dbl(value));
}

void CheckpointWriter::vocab(const std::string& name, const std::vector<std::string>& tokens) {
  std::ostringstream ss;
  ss << tokens.size();
  for (const auto& t : tokens) ss << ' ' << t;
  header_.emplace_back("vocab:" + name, ss.str());
}

void CheckpointWriter::ints(const std::string& name, const std::vector<int>& values) {
  std::ostringstream ss;
  ss << values.size();
  for (int v : values) ss << ' ' << v;
  header_.emplace_back("ints:" + name, ss.str());
}

void CheckpointWriter::tensor(const std::string& name, const Tensor& t) {
  header_.emplace_back("tensor:" + name,
                       std::to_string(t.rows) + " " + std::to_string(t.cols));
  tensors_.emplace_back(name, &t);
}

void CheckpointWriter::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << kMagic << '\n';
  out << "gate_order " << kGateNote << '\n';
  for (const auto& [k, v] : header_) out << k << ' ' << v << '\n';
  out << "blob\n";
  for (const auto& [name, t] : tensors_) {
    std::vector<float> buf(t->data.begin(), t->data.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

CheckpointReader::CheckpointReader(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw std::runtime_error("bad checkpoint magic in " + path);
  }
  std::vector<std::pair<std::string, std::pair<int, int>>> tensor_order;
  while (std::getline(in, line)) {
    if (line == "blob") break;
    auto sp = line.find(' ');
    if (sp == std::string::npos) throw std::runtime_error("bad checkpoint header line: " + line);
    std::string key = line.substr(0, sp);
    std::string val = line.substr(sp + 1);
    if (key.rfind("tensor:", 0) == 0) {
      std::istringstream ss(val);
      int r, c;
      ss >> r >> c;
      tensor_order.emplace_back(key.substr(7), std::make_pair(r, c));
    } else if (key.rfind("vocab:", 0) == 0) {
      std::istringstream ss(val);
      size_t n;
      ss >> n;
      std::vector<std::string> toks(n);
      for (auto& t : toks) ss >> t;
      vocabs_[key.substr(6)] = std::move(toks);
    } else if (key.rfind("ints:", 0) == 0) {
      std::istringstream ss(val);
      size_t n;
      ss >> n;
      std::vector<int> vals(n);
      for (auto& v : vals) ss >> v;
      ints_[key.substr(5)] = std::move(vals);
    } else {
      fields_[key] = val;
    }
  }
  for (const auto& [name, shape] : tensor_order) {
    Tensor t(shape.first, shape.second);
    std::vector<float> buf(static_cast<size_t>(t.size()));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated checkpoint blob in " + path);
    for (int i = 0; i < t.size(); ++i) t.data[static_cast<size_t>(i)] = buf[static_cast<size_t>(i)];
    tensors_[name] = std::move(t);
  }
}

const std::string& CheckpointReader::field(const std::string& key) const {
  auto it = fields_.find(key);
  if (it == fields_.end()) throw std::runtime_error("checkpoint missing field: " + key);
  return it->second;
}
long long CheckpointReader::field_int(const std::string& key) const {
  return std::stoll(field(key));
}
uint64_t CheckpointReader::field_u64(const std::string& key) const {
  return std::stoull(field(key));
}
double CheckpointReader::field_double(const std::string& key) const {
  return std::stod(field(key));
}
bool CheckpointReader::has(const std::string& key) const { return fields_.count(key) > 0; }

std::vector<std::string> CheckpointReader::vocab(const std::string& name) const {
  auto it = vocabs_.find(name);
  if (it == vocabs_.end()) throw std::runtime_error("checkpoint missing vocab: " + name);
  return it->second;
}
std::vector<int> CheckpointReader::ints(const std::string& name) const {
  auto it = ints_.find(name);
  if (it == ints_.end()) throw std::runtime_error("checkpoint missing ints: " + name);
  return it->second;
}
Tensor CheckpointReader::tensor(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::runtime_error("checkpoint missing tensor: " + name);
  return it->second;
}

void save_lm(const std::string& path, const LmModel& m, uint64_t seed) {
  CheckpointWriter w;
  w.field("kind", std::string("lm"));
  w.field("direction", std::string(m.direction == LmDirection::kForward ? "forward" : "backward"));
  w.field("embed_dim", static_cast<long long>(m.embed_dim()));
  w.field("hidden_dim", static_cast<long long>(m.stack.hidden_dim));
  w.field("num_layers", static_cast<long long>(m.stack.num_layers()));
  w.field("proj_dim", static_cast<long long>(m.head.proj_dim));
  w.field("layer_dropout", m.stack.layer_dropout_p);
  w.field("seed", seed);
  w.field("vocab_hash", m.vocab.hash());
  w.field("vocab_min_count", static_cast<long long>(m.vocab.min_count_used));
  w.ints("layer_manifest", m.stack.layer_manifest);
  if (!m.stack.mask.is_binary()) {
    throw std::invalid_argument("save_lm: fractional masks are not serializable; round first");
  }
  std::vector<int> mask_bits;
  for (double z : m.stack.mask.z) mask_bits.push_back(z == 1.0 ? 1 : 0);
  w.ints("mask", mask_bits);
  w.vocab("tokens", m.vocab.id_to_token);
  w.tensor("embedding", m.embedding.value);
  for (int l = 0; l < m.stack.num_layers(); ++l) {
    const auto& layer = m.stack.layers[static_cast<size_t>(l)];
    w.field("layer" + std::to_string(l) + "_input_dim",
            static_cast<long long>(layer.input_dim));
    w.tensor("l" + std::to_string(l) + ".w", layer.w.value);
    w.tensor("l" + std::to_string(l) + ".b", layer.b.value);
  }
  w.tensor("head.w_proj", m.head.w_proj.value);
  w.tensor("head.b_proj", m.head.b_proj.value);
  w.tensor("head.w_out", m.head.w_out.value);
  w.tensor("head.b_out", m.head.b_out.value);
  w.write(path);
}

LmModel load_lm(const std::string& path) {
  CheckpointReader r(path);
  if (r.field("kind") != "lm") throw std::runtime_error("not an lm checkpoint: " + path);
  LmModel m;
  m.direction = r.field("direction") == "forward" ? LmDirection::kForward
                                                  : LmDirection::kBackward;
  m.vocab = Vocab::from_tokens(
      [&] {
        auto toks = r.vocab("tokens");
        return std::vector<std::string>(toks.begin() + 3, toks.end());
      }(),
      static_cast<int>(r.field_int("vocab_min_count")));
  m.init_seed = r.field_u64("seed");
  int L = static_cast<int>(r.field_int("num_layers"));
  int h = static_cast<int>(r.field_int("hidden_dim"));
  int e = static_cast<int>(r.field_int("embed_dim"));
  m.embedding = Param("embedding", r.tensor("embedding"));
  m.stack.embed_dim = e;
  m.stack.hidden_dim = h;
  m.stack.layer_dropout_p = r.field_double("layer_dropout");
  m.stack.layer_manifest = r.ints("layer_manifest");
  for (int l = 0; l < L; ++l) {
    LstmLayer layer;
    layer.hidden_dim = h;
    layer.input_dim = static_cast<int>(r.field_int("layer" + std::to_string(l) + "_input_dim"));
    layer.w = Param("stack.l" + std::to_string(l) + ".w", r.tensor("l" + std::to_string(l) + ".w"));
    layer.b = Param("stack.l" + std::to_string(l) + ".b", r.tensor("l" + std::to_string(l) + ".b"));
    m.stack.layers.push_back(std::move(layer));
  }
  auto mask = r.ints("mask");
  m.stack.mask.z.clear();
  for (int v : mask) m.stack.mask.z.push_back(v != 0 ? 1.0 : 0.0);
  m.head.proj_dim = static_cast<int>(r.field_int("proj_dim"));
  m.head.w_proj = Param("head.w_proj", r.tensor("head.w_proj"));
  m.head.b_proj = Param("head.b_proj", r.tensor("head.b_proj"));
  m.head.w_out = Param("head.w_out", r.tensor("head.w_out"));
  m.head.b_out = Param("head.b_out", r.tensor("head.b_out"));
  return m;
}

void save_tagger(const std::string& path, const TaggerModel& m,
                 const ContextEmbedder* emb, uint64_t seed) {
  if (m.use_lm && !emb) throw std::invalid_argument("save_tagger: embedder required");
  CheckpointWriter w;
  w.field("kind", std::string("tagger"));
  w.field("use_lm", static_cast<long long>(m.use_lm ? 1 : 0));
  w.field("char_embed_dim", static_cast<long long>(m.dims.char_embed));
  w.field("char_hidden", static_cast<long long>(m.dims.char_hidden));
  w.field("word_embed_dim", static_cast<long long>(m.dims.word_embed));
  w.field("word_hidden", static_cast<long long>(m.dims.word_hidden));
  w.field("seed", seed);
  w.vocab("words", m.word_vocab.id_to_token);
  std::vector<int> chars;
  for (uint32_t cp : m.char_vocab.id_to_char) chars.push_back(static_cast<int>(cp));
  w.ints("chars", chars);
  w.vocab("labels", m.labels.names);
  w.tensor("char_embed", m.char_embed.value);
  w.tensor("char_fwd.w", m.char_fwd.w.value);
  w.tensor("char_fwd.b", m.char_fwd.b.value);
  w.tensor("char_bwd.w", m.char_bwd.w.value);
  w.tensor("char_bwd.b", m.char_bwd.b.value);
  w.tensor("w_char_proj", m.w_char_proj.value);
  w.tensor("b_char_proj", m.b_char_proj.value);
  w.tensor("word_embed", m.word_embed.value);
  w.tensor("word_fwd.w", m.word_fwd.w.value);
  w.tensor("word_fwd.b", m.word_fwd.b.value);
  w.tensor("word_bwd.w", m.word_bwd.w.value);
  w.tensor("word_bwd.b", m.word_bwd.b.value);
  w.tensor("w_emit", m.w_emit.value);
  w.tensor("trans", m.trans.value);
  if (m.use_lm) {
    w.field("lm_vocab_hash", emb->fwd.vocab.hash());
    w.field("r_dim", static_cast<long long>(emb->r_dim));
    w.tensor("w_cr", emb->w_cr.value);
    w.tensor("b_cr", emb->b_cr.value);
  }
  w.write(path);
}

TaggerModel load_tagger(const std::string& path, ContextEmbedder* emb) {
  CheckpointReader r(path);
  if (r.field("kind") != "tagger") throw std::runtime_error("not a tagger checkpoint: " + path);
  TaggerModel m;
  m.use_lm = r.field_int("use_lm") != 0;
  if (m.use_lm) {
    if (!emb) throw std::runtime_error("tagger checkpoint needs an embedder");
    if (r.field_u64("lm_vocab_hash") != emb->fwd.vocab.hash()) {
      throw std::runtime_error("tagger checkpoint was trained with a different LM vocab");
    }
  }
  m.dims.char_embed = static_cast<int>(r.field_int("char_embed_dim"));
  m.dims.char_hidden = static_cast<int>(r.field_int("char_hidden"));
  m.dims.word_embed = static_cast<int>(r.field_int("word_embed_dim"));
  m.dims.word_hidden = static_cast<int>(r.field_int("word_hidden"));
  m.word_vocab = Vocab::from_tokens(
      [&] {
        auto toks = r.vocab("words");
        return std::vector<std::string>(toks.begin() + 3, toks.end());
      }(),
      0);
  for (int v : r.ints("chars")) {
    uint32_t cp = static_cast<uint32_t>(v);
    if (m.char_vocab.char_to_id.count(cp) == 0) {
      m.char_vocab.char_to_id[cp] = m.char_vocab.size();
      m.char_vocab.id_to_char.push_back(cp);
    }
  }
  m.labels.names = r.vocab("labels");
  for (int i = 0; i < m.labels.size(); ++i) m.labels.ids[m.labels.names[static_cast<size_t>(i)]] = i;
  auto t = [&](const char* name) { return r.tensor(name); };
  m.char_embed = Param("char_embed", t("char_embed"));
  m.char_fwd.w = Param("char_fwd.w", t("char_fwd.w"));
  m.char_fwd.b = Param("char_fwd.b", t("char_fwd.b"));
  m.char_bwd.w = Param("char_bwd.w", t("char_bwd.w"));
  m.char_bwd.b = Param("char_bwd.b", t("char_bwd.b"));
  m.char_fwd.hidden_dim = m.char_bwd.hidden_dim = m.dims.char_hidden;
  m.char_fwd.input_dim = m.char_bwd.input_dim = m.dims.char_embed;
  m.w_char_proj = Param("w_char_proj", t("w_char_proj"));
  m.b_char_proj = Param("b_char_proj", t("b_char_proj"));
  m.word_embed = Param("word_embed", t("word_embed"));
  m.word_fwd.w = Param("word_fwd.w", t("word_fwd.w"));
  m.word_fwd.b = Param("word_fwd.b", t("word_fwd.b"));
  m.word_bwd.w = Param("word_bwd.w", t("word_bwd.w"));
  m.word_bwd.b = Param("word_bwd.b", t("word_bwd.b"));
  m.word_fwd.hidden_dim = m.word_bwd.hidden_dim = m.dims.word_hidden;
  m.word_fwd.input_dim = m.word_bwd.input_dim = m.v_dim();
  m.w_emit = Param("w_emit", t("w_emit"));
  m.trans = Param("trans", t("trans"));
  if (m.use_lm) {
    emb->r_dim = static_cast<int>(r.field_int("r_dim"));
    emb->w_cr = Param("w_cr", t("w_cr"));
    emb->b_cr = Param("b_cr", t("b_cr"));
    if (emb->w_cr.value.rows != emb->feature_dim()) {
      throw std::runtime_error("tagger checkpoint W_cr does not match embedder dims");
    }
  }
  return m;
}

uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing file: " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<uint8_t>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace denselm
