#include <catch2/catch_amalgamated.hpp>

#include <cctype>
#include <string>
#include <vector>

#include "sinet/checkpoint.hpp"
#include "sinet/model.hpp"
#include "support/synthetic.hpp"

using namespace sinet;

namespace {

SinetModel small_model(std::uint64_t seed = 5) {
  SinetConfig c;
  c.variant = Variant::DualBranch;
  c.smiles_len = 6;
  c.inchi_len = 8;
  c.smiles_vocab = Vocabulary{"CNO", false};
  c.inchi_vocab = Vocabulary{"/1=CHIShn", false};
  c.conv_layers = 1;
  c.conv_filters = 2;
  c.lstm_layers = 1;
  c.lstm_units = 3;
  c.dense_units = 2;
  return build_model(c, seed);
}

Tensor sample_onehot(Dim len, Dim v, std::uint64_t seed) {
  SplitRng rng(seed);
  std::vector<double> data(static_cast<std::size_t>(len * v), 0.0);
  for (Dim t = 0; t < len - 2; ++t)
    data[static_cast<std::size_t>(t * v) + rng.next_below(static_cast<std::uint64_t>(v))] = 1.0;
  return Tensor(Shape{len, v}, std::move(data));
}

// reassemble a checkpoint from parts, recomputing length and CRC
std::string rebuild(const nlohmann::json& header, const std::string& blobs) {
  std::string out;
  out.append(kCheckpointMagic, 4);
  detail::put_u32le(out, kCheckpointVersion);
  const std::string hj = header.dump();
  detail::put_u32le(out, static_cast<std::uint32_t>(hj.size()));
  out += hj;
  out += blobs;
  detail::put_u32le(out, crc32(out.data(), out.size()));
  return out;
}

struct Parts {
  nlohmann::json header;
  std::string blobs;
};

Parts split(const std::string& bytes) {
  const std::uint32_t len =
      detail::get_u32le(reinterpret_cast<const unsigned char*>(bytes.data()) + 8);
  return {nlohmann::json::parse(bytes.substr(12, len)),
          bytes.substr(12 + len, bytes.size() - 4 - 12 - len)};
}

}  // namespace

TEST_CASE("a checkpoint round trip is bitwise faithful") {
  synth::TempDir dir;
  SinetModel m = small_model();
  m.metadata().provenance = "finetuned-from:deadbeefdeadbeef";
  const std::string path = dir.file("model.sinc");
  save_checkpoint(m, path);
  const SinetModel back = load_checkpoint(path);

  REQUIRE(back.config().variant == m.config().variant);
  REQUIRE(back.config().smiles_vocab == m.config().smiles_vocab);
  REQUIRE(back.metadata().init_seed == m.metadata().init_seed);
  REQUIRE(back.metadata().provenance == "finetuned-from:deadbeefdeadbeef");
  REQUIRE(back.metadata().checkpoint_id == m.metadata().checkpoint_id);
  REQUIRE(back.parameters().size() == m.parameters().size());
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    REQUIRE(back.parameters()[i].name == m.parameters()[i].name);
    REQUIRE(back.parameters()[i].value.data() == m.parameters()[i].value.data());
  }

  const Tensor sm = sample_onehot(6, 3, 1);
  const Tensor in = sample_onehot(8, 9, 2);
  REQUIRE(back.forward_one(&sm, &in).item() == m.forward_one(&sm, &in).item());
}

TEST_CASE("serializing twice yields identical bytes") {
  SinetModel m = small_model();
  REQUIRE(serialize_checkpoint(m) == serialize_checkpoint(m));
}

TEST_CASE("the checkpoint id tracks parameter content") {
  SinetModel m = small_model();
  const std::string id = compute_checkpoint_id(m);
  REQUIRE(id.size() == 16);
  for (const char c : id) REQUIRE((std::isdigit(static_cast<unsigned char>(c)) ||
                                   (c >= 'a' && c <= 'f')));
  REQUIRE(compute_checkpoint_id(m) == id);
  m.parameters()[0].value.data()[0] += 1e-9;
  REQUIRE(compute_checkpoint_id(m) != id);
  // a different seed gives a different identity too
  SinetModel other = small_model(6);
  REQUIRE(compute_checkpoint_id(other) != id);
}

TEST_CASE("each corruption class reports a structured error") {
  SinetModel m = small_model();
  const std::string good = serialize_checkpoint(m);

  SECTION("flipped magic") {
    std::string bad = good;
    bad[0] = 'X';
    REQUIRE_THROWS_WITH(deserialize_checkpoint(bad, "t"),
                        Catch::Matchers::ContainsSubstring("bad magic at offset 0"));
  }
  SECTION("truncation") {
    REQUIRE_THROWS_WITH(deserialize_checkpoint(good.substr(0, 10), "t"),
                        Catch::Matchers::ContainsSubstring("truncated"));
  }
  SECTION("unsupported version") {
    std::string bad = good;
    bad[4] = 9;
    REQUIRE_THROWS_WITH(deserialize_checkpoint(bad, "t"),
                        Catch::Matchers::ContainsSubstring("unsupported checkpoint version 9"));
  }
  SECTION("header length overrun") {
    std::string bad = good;
    bad[8] = static_cast<char>(0xFF);
    bad[9] = static_cast<char>(0xFF);
    bad[10] = static_cast<char>(0xFF);
    bad[11] = static_cast<char>(0x7F);
    REQUIRE_THROWS_WITH(deserialize_checkpoint(bad, "t"),
                        Catch::Matchers::ContainsSubstring("overruns the file"));
  }
  SECTION("flip inside the JSON header") {
    std::string bad = good;
    bad[20] = static_cast<char>(bad[20] ^ 0x01);
    REQUIRE_THROWS_WITH(deserialize_checkpoint(bad, "t"),
                        Catch::Matchers::ContainsSubstring("CRC mismatch"));
  }
  SECTION("flip inside the parameter blobs") {
    std::string bad = good;
    bad[bad.size() - 12] = static_cast<char>(bad[bad.size() - 12] ^ 0x80);
    REQUIRE_THROWS_WITH(deserialize_checkpoint(bad, "t"),
                        Catch::Matchers::ContainsSubstring("CRC mismatch"));
  }
  SECTION("flip inside the stored CRC") {
    std::string bad = good;
    bad[bad.size() - 1] = static_cast<char>(bad[bad.size() - 1] ^ 0x10);
    REQUIRE_THROWS_WITH(deserialize_checkpoint(bad, "t"),
                        Catch::Matchers::ContainsSubstring("CRC mismatch"));
  }
}

TEST_CASE("every random single-byte flip is rejected") {
  SinetModel m = small_model();
  const std::string good = serialize_checkpoint(m);
  SplitRng rng(808);
  for (int trial = 0; trial < 100; ++trial) {
    std::string bad = good;
    const std::size_t pos = rng.next_below(bad.size());
    const unsigned bit = 1u << rng.next_below(8);
    bad[pos] = static_cast<char>(static_cast<unsigned char>(bad[pos]) ^ bit);
    REQUIRE_THROWS_AS(deserialize_checkpoint(bad, "flip"), FormatError);
  }
}

TEST_CASE("a valid CRC cannot mask a manifest that disagrees with the architecture") {
  SinetModel m = small_model();
  Parts parts = split(serialize_checkpoint(m));

  SECTION("renamed parameter") {
    nlohmann::json h = parts.header;
    h["params"][0]["name"] = "smiles.conv9.kernels";
    REQUIRE_THROWS_WITH(deserialize_checkpoint(rebuild(h, parts.blobs), "t"),
                        Catch::Matchers::ContainsSubstring("in the header but"));
  }
  SECTION("wrong parameter count") {
    nlohmann::json h = parts.header;
    h["params"].erase(h["params"].size() - 1);
    REQUIRE_THROWS_WITH(deserialize_checkpoint(rebuild(h, parts.blobs), "t"),
                        Catch::Matchers::ContainsSubstring("header lists"));
  }
  SECTION("wrong shape") {
    nlohmann::json h = parts.header;
    h["params"][0]["shape"] = {1, 1, 1};
    REQUIRE_THROWS_WITH(deserialize_checkpoint(rebuild(h, parts.blobs), "t"),
                        Catch::Matchers::ContainsSubstring("in the header but"));
  }
  SECTION("missing blob bytes") {
    REQUIRE_THROWS_WITH(
        deserialize_checkpoint(
            rebuild(parts.header, parts.blobs.substr(0, parts.blobs.size() - 8)), "t"),
        Catch::Matchers::ContainsSubstring("overruns the file at offset"));
  }
  SECTION("trailing blob bytes") {
    REQUIRE_THROWS_WITH(
        deserialize_checkpoint(rebuild(parts.header, parts.blobs + std::string(8, '\0')), "t"),
        Catch::Matchers::ContainsSubstring("unexpected trailing blob bytes"));
  }
  SECTION("unchanged parts reassemble into a loadable file") {
    REQUIRE_NOTHROW(deserialize_checkpoint(rebuild(parts.header, parts.blobs), "t"));
  }
}

TEST_CASE("file-level failures are I/O errors, not format errors") {
  synth::TempDir dir;
  REQUIRE_THROWS_AS(load_checkpoint(dir.file("absent.sinc")), IoError);
}
