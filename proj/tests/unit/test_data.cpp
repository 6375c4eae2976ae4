#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include <doctest.h>

#include "deconfound/common.hpp"
#include "deconfound/data/labels.hpp"
#include "deconfound/data/manifest.hpp"
#include "deconfound/data/splits.hpp"
#include "deconfound/data/synthetic.hpp"

using namespace dcfd;

namespace {

std::vector<const data::Utterance*> pointers(const std::vector<data::Utterance>& v) {
    std::vector<const data::Utterance*> out;
    out.reserve(v.size());
    for (const data::Utterance& u : v) out.push_back(&u);
    return out;
}

std::filesystem::path temp_dir(const std::string& name) {
    const std::filesystem::path p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("nine-point rating bins: boundary values") {
    using data::Level;
    CHECK(data::bin_muse_rating(1.0) == Level::low);
    CHECK(data::bin_muse_rating(4.5) == Level::low);    // boundary stays low
    CHECK(data::bin_muse_rating(4.5001) == Level::mid);
    CHECK(data::bin_muse_rating(5.5) == Level::mid);    // boundary stays mid
    CHECK(data::bin_muse_rating(5.5001) == Level::high);
    CHECK(data::bin_muse_rating(9.0) == Level::high);
}

TEST_CASE("five-point rating bins: boundary values") {
    using data::Level;
    CHECK(data::bin_five_point_rating(1.0) == Level::low);
    CHECK(data::bin_five_point_rating(2.75) == Level::low);
    CHECK(data::bin_five_point_rating(2.76) == Level::mid);
    CHECK(data::bin_five_point_rating(3.25) == Level::mid);
    CHECK(data::bin_five_point_rating(3.26) == Level::high);
    CHECK(data::bin_five_point_rating(5.0) == Level::high);
}

TEST_CASE("stress bins around the population mean") {
    using data::Level;
    const double mean = 17.0;
    CHECK(data::bin_stress(15.0, mean) == Level::low);   // mean - 2 inclusive
    CHECK(data::bin_stress(15.01, mean) == Level::mid);
    CHECK(data::bin_stress(19.0, mean) == Level::mid);   // mean + 2 inclusive
    CHECK(data::bin_stress(19.01, mean) == Level::high);
}

TEST_CASE("adjusted PSS double-counts the indicated item") {
    const std::vector<double> items = {1.0, 2.0, 3.0};
    CHECK(data::adjusted_pss(items, 1) == 8.0);
    CHECK(data::adjusted_pss(items, 0) == 7.0);
}

TEST_CASE("rating scale selection follows the corpus tag") {
    data::Utterance u;
    u.activation_rating = 3.25;  // mid on the 5-point scale, low on the 9-point
    u.valence_rating = 6.0;      // high on the 9-point scale
    u.corpus = "iemocap";
    CHECK(data::bin_emotion_rating(u, data::EmotionTarget::activation) == data::Level::mid);
    u.corpus = "msp";
    CHECK(data::bin_emotion_rating(u, data::EmotionTarget::activation) == data::Level::mid);
    u.corpus = "muse";
    CHECK(data::bin_emotion_rating(u, data::EmotionTarget::activation) == data::Level::low);
    u.corpus = "synthetic";
    CHECK(data::bin_emotion_rating(u, data::EmotionTarget::valence) == data::Level::high);
}

TEST_CASE("confound classes: PSS bins, spontaneity flags, missing annotation") {
    data::Utterance u;
    u.confound = data::PssScore{20.0};
    CHECK(data::confound_class(u, 17.0) == 2);
    CHECK(data::confound_class_count(u) == 3);
    u.confound = data::SpontaneityFlag{true};
    CHECK(data::confound_class(u, 0.0) == 1);
    CHECK(data::confound_class_count(u) == 2);
    u.confound = std::monostate{};
    CHECK_THROWS_AS(data::confound_class(u, 0.0), DataError);
}

TEST_CASE("duration filter keeps the 3..35 second band inclusive") {
    std::vector<data::Utterance> v(5);
    v[0].duration_s = 2.99;
    v[1].duration_s = 3.0;
    v[2].duration_s = 10.0;
    v[3].duration_s = 35.0;
    v[4].duration_s = 35.01;
    const auto kept = data::filter_by_duration(v);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0] == &v[1]);
    CHECK(kept[2] == &v[3]);
}

TEST_CASE("session_pss_mean averages one score per distinct session") {
    std::vector<data::Utterance> v(3);
    v[0].session_id = "a";
    v[0].confound = data::PssScore{10.0};
    v[1].session_id = "a";  // duplicate session, same score: counted once
    v[1].confound = data::PssScore{10.0};
    v[2].session_id = "b";
    v[2].confound = data::PssScore{20.0};
    CHECK(data::session_pss_mean(pointers(v)) == doctest::Approx(15.0));
}

TEST_CASE("synthetic generator: deterministic for identical configs") {
    data::SyntheticConfig cfg;
    cfg.speakers = 4;
    cfg.utterances_per_speaker = 3;
    cfg.correlation = 0.5;
    cfg.acoustic_shift = 0.3;
    cfg.lexical_shift = 0.2;
    cfg.seed = 99;
    const auto a = data::generate_synthetic_corpus(cfg);
    const auto b = data::generate_synthetic_corpus(cfg);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == 12);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].tokens == b[i].tokens);
        CHECK(a[i].acoustic->values() == b[i].acoustic->values());
        CHECK(*a[i].activation_rating == *b[i].activation_rating);
    }
    CHECK(a[0].id == "u00000");
    CHECK(a[0].speaker_id == "spk00");
    CHECK(a[11].id == "u00011");
}

TEST_CASE("synthetic generator: ratings stay inside their emotion's bin") {
    data::SyntheticConfig cfg;
    cfg.speakers = 10;
    cfg.utterances_per_speaker = 10;
    cfg.seed = 3;
    for (const data::Utterance& u : data::generate_synthetic_corpus(cfg)) {
        // Rating jitter is +-0.4 around 3/5/7, so the 9-point bin recovers
        // the generating class exactly; activation and valence agree.
        const data::Level act = data::bin_muse_rating(*u.activation_rating);
        const data::Level val = data::bin_muse_rating(*u.valence_rating);
        CHECK(act == val);
        const auto* pss = std::get_if<data::PssScore>(&u.confound);
        REQUIRE(pss != nullptr);
        const double score = pss->score;
        CHECK(((score >= 12.0 && score <= 14.0) || (score >= 16.0 && score <= 18.0) ||
               (score >= 20.0 && score <= 22.0)));
    }
}

TEST_CASE("synthetic generator: rho = 1 maps the confound deterministically") {
    data::SyntheticConfig cfg;
    cfg.speakers = 8;
    cfg.utterances_per_speaker = 10;
    cfg.correlation = 1.0;
    cfg.seed = 11;
    for (const data::Utterance& u : data::generate_synthetic_corpus(cfg)) {
        const int e = static_cast<int>(data::bin_muse_rating(*u.activation_rating));
        const auto& pss = std::get<data::PssScore>(u.confound);
        const int c = static_cast<int>(data::bin_stress(pss.score, 17.0));
        CHECK(c == e % 3);
    }
}

TEST_CASE("synthetic generator: rho = 0 passes a chi-square independence check") {
    data::SyntheticConfig cfg;
    cfg.speakers = 60;
    cfg.utterances_per_speaker = 30;
    cfg.correlation = 0.0;
    cfg.seed = 17;
    const auto corpus = data::generate_synthetic_corpus(cfg);
    // 3x3 contingency of emotion class vs confound class.
    double table[3][3] = {};
    for (const data::Utterance& u : corpus) {
        const int e = static_cast<int>(data::bin_muse_rating(*u.activation_rating));
        const auto& pss = std::get<data::PssScore>(u.confound);
        const int c = static_cast<int>(data::bin_stress(pss.score, 17.0));
        table[e][c] += 1.0;
    }
    const double n = static_cast<double>(corpus.size());
    double chi2 = 0.0;
    for (int e = 0; e < 3; ++e)
        for (int c = 0; c < 3; ++c) {
            double row = 0.0, col = 0.0;
            for (int j = 0; j < 3; ++j) row += table[e][j];
            for (int i = 0; i < 3; ++i) col += table[i][c];
            const double expected = row * col / n;
            chi2 += (table[e][c] - expected) * (table[e][c] - expected) / expected;
        }
    // Critical value for df = 4 at alpha = 0.01.
    CHECK(chi2 < 13.2767);
}

TEST_CASE("synthetic generator: marker rate rises with the confound level") {
    data::SyntheticConfig cfg;
    cfg.speakers = 40;
    cfg.utterances_per_speaker = 20;
    cfg.correlation = 0.0;
    cfg.lexical_shift = 0.5;
    cfg.seed = 23;
    const std::set<std::string> markers = {"uh", "um", "like", "really", "very"};
    double rate[3] = {}, count[3] = {};
    for (const data::Utterance& u : data::generate_synthetic_corpus(cfg)) {
        const auto& pss = std::get<data::PssScore>(u.confound);
        const int c = static_cast<int>(data::bin_stress(pss.score, 17.0));
        double m = 0.0;
        for (const std::string& tok : u.tokens) m += markers.count(tok) ? 1.0 : 0.0;
        rate[c] += m / static_cast<double>(u.tokens.size());
        count[c] += 1.0;
    }
    for (int c = 0; c < 3; ++c) rate[c] /= count[c];
    CHECK(rate[0] < rate[1]);
    CHECK(rate[1] < rate[2]);
}

TEST_CASE("synthetic generator: spontaneity mode emits binary flags") {
    data::SyntheticConfig cfg;
    cfg.speakers = 4;
    cfg.utterances_per_speaker = 5;
    cfg.spontaneity_confound = true;
    cfg.confound_priors = {0.5, 0.5};
    cfg.seed = 5;
    bool saw[2] = {false, false};
    for (const data::Utterance& u : data::generate_synthetic_corpus(cfg)) {
        const auto& flag = std::get<data::SpontaneityFlag>(u.confound);
        saw[flag.improvised ? 1 : 0] = true;
    }
    CHECK(saw[0]);
    CHECK(saw[1]);
}

TEST_CASE("label_utterances resolves both labels against the population mean") {
    data::SyntheticConfig cfg;
    cfg.speakers = 6;
    cfg.utterances_per_speaker = 4;
    cfg.seed = 31;
    const auto corpus = data::generate_synthetic_corpus(cfg);
    const auto ptrs = pointers(corpus);
    const double mean = data::session_pss_mean(ptrs);
    const auto labeled = data::label_utterances(ptrs, data::EmotionTarget::activation, mean);
    REQUIRE(labeled.size() == corpus.size());
    for (const data::LabeledSample& s : labeled) {
        CHECK(s.utt != nullptr);
        CHECK(s.emotion == static_cast<int>(data::bin_muse_rating(*s.utt->activation_rating)));
        CHECK(s.confound >= 0);
        CHECK(s.confound <= 2);
    }
}

TEST_CASE("speaker-independent folds: disjoint roles, complete test coverage") {
    data::SyntheticConfig cfg;
    cfg.speakers = 17;
    cfg.utterances_per_speaker = 6;
    cfg.seed = 7;
    const auto corpus = data::generate_synthetic_corpus(cfg);
    const auto ptrs = pointers(corpus);
    const int k = 4;
    const auto plans = data::make_speaker_independent_folds(ptrs, k, 42);
    REQUIRE(plans.size() == static_cast<std::size_t>(k));

    std::set<std::string> test_speakers_union;
    for (const data::SplitPlan& plan : plans) {
        std::set<std::string> train_spk, val_spk, test_spk;
        for (const std::size_t i : plan.train) train_spk.insert(ptrs[i]->speaker_id);
        for (const std::size_t i : plan.validation) val_spk.insert(ptrs[i]->speaker_id);
        for (const std::size_t i : plan.test) test_spk.insert(ptrs[i]->speaker_id);
        for (const std::string& s : train_spk) {
            CHECK(val_spk.count(s) == 0);
            CHECK(test_spk.count(s) == 0);
        }
        for (const std::string& s : val_spk) CHECK(test_spk.count(s) == 0);
        CHECK(plan.train.size() + plan.validation.size() + plan.test.size() == corpus.size());
        CHECK_FALSE(val_spk.empty());
        test_speakers_union.insert(test_spk.begin(), test_spk.end());
    }
    // Every speaker serves as test data in exactly one fold.
    CHECK(test_speakers_union.size() == cfg.speakers);

    // Deterministic given the seed.
    const auto again = data::make_speaker_independent_folds(ptrs, k, 42);
    CHECK(again[0].train == plans[0].train);
    CHECK(again[0].validation == plans[0].validation);
}

TEST_CASE("split_train_validation: speaker-disjoint with a sane fraction") {
    data::SyntheticConfig cfg;
    cfg.speakers = 10;
    cfg.utterances_per_speaker = 8;
    cfg.seed = 13;
    const auto corpus = data::generate_synthetic_corpus(cfg);
    const auto ptrs = pointers(corpus);
    const auto labeled =
        data::label_utterances(ptrs, data::EmotionTarget::activation, data::session_pss_mean(ptrs));
    const auto [train, val] = data::split_train_validation(labeled, 0.2, 9);
    CHECK(train.size() + val.size() == labeled.size());
    CHECK_FALSE(val.empty());
    std::set<std::string> train_spk, val_spk;
    for (const auto& s : train) train_spk.insert(s.utt->speaker_id);
    for (const auto& s : val) val_spk.insert(s.utt->speaker_id);
    for (const std::string& s : val_spk) CHECK(train_spk.count(s) == 0);
    // Roughly 20 percent of utterances (two speakers of ten).
    CHECK(val.size() >= corpus.size() / 10);
    CHECK(val.size() <= corpus.size() * 3 / 10);
}

TEST_CASE("partition_by_confound splits source and held-out target") {
    data::SyntheticConfig cfg;
    cfg.speakers = 8;
    cfg.utterances_per_speaker = 6;
    cfg.seed = 21;
    const auto corpus = data::generate_synthetic_corpus(cfg);
    const auto ptrs = pointers(corpus);
    const auto labeled =
        data::label_utterances(ptrs, data::EmotionTarget::activation, data::session_pss_mean(ptrs));
    const auto [source, target] = data::partition_by_confound(labeled, 0);
    CHECK(source.size() + target.size() == labeled.size());
    for (const auto& s : source) CHECK(s.confound != 0);
    for (const auto& s : target) CHECK(s.confound == 0);
    CHECK_THROWS_AS(data::partition_by_confound(source, 0), DataError);  // now empty
}

TEST_CASE("feature files round-trip bit-exactly") {
    const std::filesystem::path dir = temp_dir("dcfd_featfile");
    net::Tensor t({3, 2}, {0.1, -0.2, 1e-300, 4.0, 5.5, -6.25});
    data::write_feature_file(dir / "x.dtn", t);
    const net::Tensor back = data::read_feature_file(dir / "x.dtn");
    CHECK(back.shape() == t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::uint64_t a, b;
        std::memcpy(&a, &t.values()[i], 8);
        std::memcpy(&b, &back.values()[i], 8);
        CHECK(a == b);
    }
    CHECK_THROWS_AS(data::read_feature_file(dir / "missing.dtn"), DataError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest round trip preserves utterances, labels, and features") {
    const std::filesystem::path dir = temp_dir("dcfd_manifest");
    data::SyntheticConfig cfg;
    cfg.speakers = 3;
    cfg.utterances_per_speaker = 2;
    cfg.seed = 8;
    std::vector<data::Utterance> corpus = data::generate_synthetic_corpus(cfg);
    corpus[1].confound = data::SpontaneityFlag{true};
    corpus[2].confound = std::monostate{};
    data::write_manifest(dir / "m.jsonl", corpus);

    const std::vector<data::Utterance> back = data::read_manifest(dir / "m.jsonl");
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(back[i].id == corpus[i].id);
        CHECK(back[i].speaker_id == corpus[i].speaker_id);
        CHECK(back[i].session_id == corpus[i].session_id);
        CHECK(back[i].corpus == corpus[i].corpus);
        CHECK(back[i].tokens == corpus[i].tokens);
        CHECK(back[i].duration_s == doctest::Approx(corpus[i].duration_s).epsilon(1e-15));
        REQUIRE(back[i].acoustic.has_value());
        CHECK(back[i].acoustic->values() == corpus[i].acoustic->values());
    }
    CHECK(std::get<data::PssScore>(back[0].confound).score ==
          std::get<data::PssScore>(corpus[0].confound).score);
    CHECK(std::get<data::SpontaneityFlag>(back[1].confound).improvised);
    CHECK(std::holds_alternative<std::monostate>(back[2].confound));

    // load_features = false keeps the path but skips the tensor.
    const auto lazy = data::read_manifest(dir / "m.jsonl", false);
    CHECK_FALSE(lazy[0].acoustic.has_value());
    CHECK_FALSE(lazy[0].acoustic_path.empty());
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest parse errors name the offending line") {
    const std::filesystem::path dir = temp_dir("dcfd_manifest_bad");
    std::ofstream(dir / "bad.jsonl") << R"({"id": "a", "speaker": "s", "session": "x",)"
                                     << R"( "corpus": "muse", "duration_s": 5.0})"
                                     << "\n{not json}\n";
    CHECK_THROWS_WITH_AS(data::read_manifest(dir / "bad.jsonl"), doctest::Contains("line 2"),
                         DataError);
    CHECK_THROWS_AS(data::read_manifest(dir / "missing.jsonl"), DataError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("read_wav: PCM16 and float32 mono files") {
    const std::filesystem::path dir = temp_dir("dcfd_wav");

    const auto put_u32 = [](std::string& s, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    const auto put_u16 = [](std::string& s, std::uint16_t v) {
        for (int i = 0; i < 2; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };

    // PCM16, 16 kHz, 4 samples.
    {
        const std::vector<std::int16_t> samples = {0, 16384, -16384, 32767};
        std::string payload;
        for (const std::int16_t v : samples)
            put_u16(payload, static_cast<std::uint16_t>(v));
        std::string body;
        body += "WAVEfmt ";
        put_u32(body, 16);
        put_u16(body, 1);  // PCM
        put_u16(body, 1);  // mono
        put_u32(body, 16000);
        put_u32(body, 32000);
        put_u16(body, 2);
        put_u16(body, 16);
        body += "data";
        put_u32(body, static_cast<std::uint32_t>(payload.size()));
        body += payload;
        std::string file = "RIFF";
        put_u32(file, static_cast<std::uint32_t>(body.size()));
        file += body;
        std::ofstream(dir / "pcm.wav", std::ios::binary) << file;

        const features::Waveform w = data::read_wav(dir / "pcm.wav");
        CHECK(w.sample_rate == 16000.0);
        REQUIRE(w.samples.size() == 4);
        CHECK(w.samples[0] == 0.0);
        CHECK(w.samples[1] == doctest::Approx(0.5).epsilon(1e-3));
        CHECK(w.samples[2] == doctest::Approx(-0.5).epsilon(1e-3));
    }

    // IEEE float32, 8 kHz, 3 samples.
    {
        const std::vector<float> samples = {0.25f, -0.5f, 1.0f};
        std::string payload;
        for (const float v : samples) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32(payload, bits);
        }
        std::string body;
        body += "WAVEfmt ";
        put_u32(body, 16);
        put_u16(body, 3);  // IEEE float
        put_u16(body, 1);
        put_u32(body, 8000);
        put_u32(body, 32000);
        put_u16(body, 4);
        put_u16(body, 32);
        body += "data";
        put_u32(body, static_cast<std::uint32_t>(payload.size()));
        body += payload;
        std::string file = "RIFF";
        put_u32(file, static_cast<std::uint32_t>(body.size()));
        file += body;
        std::ofstream(dir / "f32.wav", std::ios::binary) << file;

        const features::Waveform w = data::read_wav(dir / "f32.wav");
        CHECK(w.sample_rate == 8000.0);
        REQUIRE(w.samples.size() == 3);
        CHECK(w.samples[0] == doctest::Approx(0.25));
        CHECK(w.samples[2] == doctest::Approx(1.0));
    }

    std::ofstream(dir / "junk.wav", std::ios::binary) << "NOTAWAVFILE";
    CHECK_THROWS_AS(data::read_wav(dir / "junk.wav"), DataError);
    std::filesystem::remove_all(dir);
}
