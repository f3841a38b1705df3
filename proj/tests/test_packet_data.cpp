#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "kddt/packet_data.hpp"
#include "kddt/rng.hpp"

using namespace kddt;

namespace {

std::filesystem::path tmp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
}

void push32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(x & 0xff);
    v.push_back((x >> 8) & 0xff);
    v.push_back((x >> 16) & 0xff);
    v.push_back((x >> 24) & 0xff);
}

void push16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(x & 0xff);
    v.push_back((x >> 8) & 0xff);
}

std::vector<std::uint8_t> pcap_header() {
    std::vector<std::uint8_t> v;
    push32(v, 0xa1b2c3d4u);
    push16(v, 2);
    push16(v, 4);
    push32(v, 0);
    push32(v, 0);
    push32(v, 65535);
    push32(v, 1);
    return v;
}

}  // namespace

TEST_CASE("vocabulary is a 260-entry bijection with fixed specials") {
    Vocabulary v;
    CHECK(v.size() == 260);
    CHECK(Vocabulary::kPad == 0);
    CHECK(Vocabulary::kBos == 1);
    CHECK(Vocabulary::kEos == 2);
    CHECK(Vocabulary::kUnk == 3);
    for (int id = 0; id < v.size(); ++id) {
        CHECK(v.encode(v.decode(id)) == id);
    }
    CHECK(v.byte_token(0x00) == 4);
    CHECK(v.byte_token(0xff) == 259);
    CHECK(v.decode(v.byte_token(0xde)) == "de");
    CHECK_THROWS_AS(v.decode(260), std::out_of_range);
    CHECK_THROWS_AS(v.encode("zz"), std::out_of_range);
}

TEST_CASE("tokenize_packet layout") {
    Vocabulary v;
    RawPacket p;
    p.payload = {0xDE, 0xAD};
    auto tp = tokenize_packet(p, v, 6);
    CHECK(tp.ids == std::vector<int>{Vocabulary::kBos, v.byte_token(0xDE), v.byte_token(0xAD),
                                     Vocabulary::kEos, Vocabulary::kPad, Vocabulary::kPad});
    CHECK(tp.true_len == 4);

    RawPacket empty;
    auto te = tokenize_packet(empty, v, 4);
    CHECK(te.ids == std::vector<int>{Vocabulary::kBos, Vocabulary::kEos, Vocabulary::kPad,
                                     Vocabulary::kPad});
    CHECK(te.true_len == 2);

    RawPacket longp;
    longp.payload.assign(10, 0x41);
    auto tl = tokenize_packet(longp, v, 6);
    CHECK(tl.true_len == 6);  // truncated, no EOS
    for (int i = 1; i < 6; ++i) CHECK(tl.ids[i] == v.byte_token(0x41));
}

TEST_CASE("tokenize round-trips payloads that fit") {
    Vocabulary v;
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        RawPacket p;
        int len = rng.uniform_int(0, 14);
        for (int i = 0; i < len; ++i)
            p.payload.push_back(static_cast<std::uint8_t>(rng.uniform_int(0, 255)));
        auto tp = tokenize_packet(p, v, 16);
        CHECK(detokenize_payload(tp, v) == p.payload);
        CHECK(static_cast<int>(tp.ids.size()) == 16);
    }
}

TEST_CASE("chronological split arithmetic and order preservation") {
    LabeledDataset ds;
    ds.kind = DatasetKind::IdTrain;
    for (int i = 0; i < 10; ++i) {
        RawPacket p;
        p.timestamp_us = static_cast<std::uint64_t>(i) * 10;
        p.label = 0;
        ds.packets.push_back(p);
    }
    auto [train, test] = chronological_split(ds, 0.8);
    CHECK(train.size() == 8);
    CHECK(test.size() == 2);
    CHECK(train.packets.back().timestamp_us < test.packets.front().timestamp_us);

    LabeledDataset three;
    three.kind = DatasetKind::IdTrain;
    three.packets.resize(3);
    for (int i = 0; i < 3; ++i) {
        three.packets[i].timestamp_us = i;
        three.packets[i].label = 0;
    }
    auto [t1, t2] = chronological_split(three, 0.5);
    CHECK(t1.size() == 1);  // floor rule
    CHECK(t2.size() == 2);

    CHECK_THROWS_AS(chronological_split(ds, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(chronological_split(ds, 0.0), std::invalid_argument);

    // concatenation equals the input
    std::vector<std::uint64_t> ts;
    for (const auto& p : train.packets) ts.push_back(p.timestamp_us);
    for (const auto& p : test.packets) ts.push_back(p.timestamp_us);
    for (int i = 0; i < 10; ++i) CHECK(ts[i] == ds.packets[i].timestamp_us);
}

TEST_CASE("pcap golden file parses exactly") {
    auto bytes = pcap_header();
    push32(bytes, 1);       // ts_sec
    push32(bytes, 500000);  // ts_frac (microseconds)
    push32(bytes, 4);       // incl_len
    push32(bytes, 4);       // orig_len
    bytes.insert(bytes.end(), {0xDE, 0xAD, 0xBE, 0xEF});
    push32(bytes, 2);
    push32(bytes, 0);
    push32(bytes, 2);
    push32(bytes, 2);
    bytes.insert(bytes.end(), {0x01, 0x02});

    auto path = tmp_file("kddt_golden.pcap");
    write_bytes(path, bytes);
    auto packets = read_pcap(path.string());
    REQUIRE(packets.size() == 2);
    CHECK(packets[0].timestamp_us == 1500000);
    CHECK(packets[0].payload == std::vector<std::uint8_t>{0xDE, 0xAD, 0xBE, 0xEF});
    CHECK(packets[1].timestamp_us == 2000000);
    CHECK(packets[1].payload == std::vector<std::uint8_t>{0x01, 0x02});
    std::filesystem::remove(path);
}

TEST_CASE("pcap edge cases") {
    auto path = tmp_file("kddt_edge.pcap");

    write_bytes(path, pcap_header());
    CHECK(read_pcap(path.string()).empty());

    auto truncated = pcap_header();
    push32(truncated, 1);
    push32(truncated, 0);
    push32(truncated, 100);  // incl_len exceeds remaining bytes
    push32(truncated, 100);
    truncated.push_back(0xAA);
    write_bytes(path, truncated);
    CHECK_THROWS_WITH_AS(read_pcap(path.string()), doctest::Contains("byte offset"),
                         std::runtime_error);

    std::vector<std::uint8_t> other;
    push32(other, 0x0a0d0d0au);  // pcapng section header block
    other.resize(24, 0);
    write_bytes(path, other);
    CHECK_THROWS_WITH_AS(read_pcap(path.string()), doctest::Contains("unsupported"),
                         std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("pcap write then read is identity on payloads and timestamps") {
    Rng rng(11);
    std::vector<RawPacket> packets;
    std::uint64_t ts = 0;
    for (int i = 0; i < 20; ++i) {
        RawPacket p;
        ts += static_cast<std::uint64_t>(rng.uniform_int(0, 2000000));
        p.timestamp_us = ts;
        int len = rng.uniform_int(0, 32);
        for (int j = 0; j < len; ++j)
            p.payload.push_back(static_cast<std::uint8_t>(rng.uniform_int(0, 255)));
        packets.push_back(std::move(p));
    }
    auto path = tmp_file("kddt_roundtrip.pcap");
    write_pcap(packets, path.string());
    auto back = read_pcap(path.string());
    REQUIRE(back.size() == packets.size());
    for (std::size_t i = 0; i < packets.size(); ++i) {
        CHECK(back[i].timestamp_us == packets[i].timestamp_us);
        CHECK(back[i].payload == packets[i].payload);
    }
    std::filesystem::remove(path);
}

TEST_CASE("jsonl decode and validation errors name the line") {
    auto path = tmp_file("kddt_test.jsonl");
    {
        std::ofstream os(path);
        os << R"({"ts_us":1,"payload_hex":"dead","label":0})" << "\n";
        os << R"({"ts_us":5,"payload_hex":"","label":1})" << "\n";
    }
    auto ds = read_jsonl(path.string(), DatasetKind::IdTrain);
    REQUIRE(ds.size() == 2);
    CHECK(ds.packets[0].payload == std::vector<std::uint8_t>{0xDE, 0xAD});
    CHECK(ds.packets[0].label == 0);
    CHECK(ds.packets[1].payload.empty());
    CHECK(ds.packets[1].label == 1);

    {
        std::ofstream os(path);
        os << R"({"ts_us":1,"payload_hex":"abc","label":0})" << "\n";
    }
    CHECK_THROWS_WITH_AS(read_jsonl(path.string(), DatasetKind::IdTrain),
                         doctest::Contains("line 1"), std::runtime_error);

    {
        std::ofstream os(path);
        os << R"({"ts_us":1,"payload_hex":"ab","label":0})" << "\n";
        os << R"({"ts_us":2,"payload_hex":"cd"})" << "\n";
    }
    CHECK_THROWS_WITH_AS(read_jsonl(path.string(), DatasetKind::IdTrain),
                         doctest::Contains("line 2"), std::runtime_error);

    {
        std::ofstream os(path);
        os << R"({"ts_us":5,"payload_hex":"ab"})" << "\n";
        os << R"({"ts_us":4,"payload_hex":"cd"})" << "\n";
    }
    CHECK_THROWS_WITH_AS(read_jsonl(path.string(), DatasetKind::Ood),
                         doctest::Contains("timestamp decreases"), std::runtime_error);

    {
        std::ofstream os(path);
        os << R"({"ts_us":5,"payload_hex":"ab","label":1})" << "\n";
    }
    CHECK_THROWS_WITH_AS(read_jsonl(path.string(), DatasetKind::Ood),
                         doctest::Contains("unexpected label"), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("jsonl write then read round-trips") {
    LabeledDataset ds;
    ds.kind = DatasetKind::IdTest;
    Rng rng(3);
    std::uint64_t ts = 0;
    for (int i = 0; i < 25; ++i) {
        RawPacket p;
        ts += static_cast<std::uint64_t>(rng.uniform_int(1, 1000));
        p.timestamp_us = ts;
        int len = rng.uniform_int(0, 8);
        for (int j = 0; j < len; ++j)
            p.payload.push_back(static_cast<std::uint8_t>(rng.uniform_int(0, 255)));
        p.label = rng.uniform_int(0, 1);
        ds.packets.push_back(std::move(p));
    }
    auto path = tmp_file("kddt_roundtrip.jsonl");
    write_jsonl(ds, path.string());
    auto back = read_jsonl(path.string(), DatasetKind::IdTest);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.packets[i].timestamp_us == ds.packets[i].timestamp_us);
        CHECK(back.packets[i].payload == ds.packets[i].payload);
        CHECK(back.packets[i].label == ds.packets[i].label);
    }
    std::filesystem::remove(path);
}

TEST_CASE("anomaly windows attach labels by timestamp") {
    auto path = tmp_file("kddt_windows.jsonl");
    {
        std::ofstream os(path);
        os << R"({"start_us":100,"end_us":200})" << "\n";
        os << R"({"start_us":500,"end_us":500})" << "\n";
    }
    auto windows = read_anomaly_windows(path.string());
    REQUIRE(windows.size() == 2);

    std::vector<RawPacket> packets(5);
    packets[0].timestamp_us = 50;
    packets[1].timestamp_us = 100;  // window start inclusive
    packets[2].timestamp_us = 200;  // window end inclusive
    packets[3].timestamp_us = 300;
    packets[4].timestamp_us = 500;
    attach_labels(packets, windows);
    CHECK(*packets[0].label == 0);
    CHECK(*packets[1].label == 1);
    CHECK(*packets[2].label == 1);
    CHECK(*packets[3].label == 0);
    CHECK(*packets[4].label == 1);
    std::filesystem::remove(path);
}

TEST_CASE("synthetic stream is deterministic per seed") {
    SyntheticConfig cfg;
    cfg.n_packets = 3000;
    cfg.seed = 7;
    auto a = generate_synthetic_stream(cfg);
    auto b = generate_synthetic_stream(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.packets[i].payload == b.packets[i].payload);
        CHECK(a.packets[i].label == b.packets[i].label);
        CHECK(a.packets[i].timestamp_us == b.packets[i].timestamp_us);
    }
    cfg.seed = 8;
    auto c = generate_synthetic_stream(cfg);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size() && !any_diff; ++i) {
        any_diff = a.packets[i].payload != c.packets[i].payload;
    }
    CHECK(any_diff);
}

TEST_CASE("synthetic abnormal fraction lands inside the tolerance band") {
    SyntheticConfig cfg;
    cfg.n_packets = 20000;
    cfg.anomaly_ratio = 0.05;
    auto ds = generate_synthetic_stream(cfg);
    long long abnormal = 0;
    for (const auto& p : ds.packets) abnormal += *p.label;
    CHECK(abnormal >= 800);
    CHECK(abnormal <= 1200);
    ds.validate();
}

TEST_CASE("synthetic incidents are maximal runs matching label transitions") {
    SyntheticConfig cfg;
    cfg.n_packets = 8000;
    cfg.anomaly_ratio = 0.06;
    cfg.mean_incident_len = 30;
    cfg.seed = 21;
    auto ds = generate_synthetic_stream(cfg);

    int transitions = 0;
    int prev = 0;
    int runs = 0;
    for (const auto& p : ds.packets) {
        int l = *p.label;
        if (l == 1 && prev == 0) {
            ++transitions;
            ++runs;
        }
        prev = l;
    }
    CHECK(runs == transitions);
    CHECK(runs >= 2);

    // incident packets carry all-zero signal bytes; the drop is abrupt
    for (std::size_t i = 1; i < ds.size(); ++i) {
        if (*ds.packets[i].label == 1 && *ds.packets[i - 1].label == 0) {
            bool all_zero = true;
            for (auto b : ds.packets[i].payload) all_zero = all_zero && b == 0;
            CHECK(all_zero);
            bool prev_nonzero = false;
            for (auto b : ds.packets[i - 1].payload) prev_nonzero = prev_nonzero || b != 0;
            CHECK(prev_nonzero);  // starts during an active phase
        }
    }
}

TEST_CASE("synthetic rejects infeasible configurations") {
    SyntheticConfig cfg;
    cfg.n_packets = 100;
    cfg.anomaly_ratio = 0.05;
    cfg.mean_incident_len = 50;  // 5 abnormal packets < one mean incident
    CHECK_THROWS_AS(generate_synthetic_stream(cfg), std::invalid_argument);

    SyntheticConfig bad;
    bad.anomaly_ratio = 0.0;
    CHECK_THROWS_AS(generate_synthetic_stream(bad), std::invalid_argument);
    bad.anomaly_ratio = 0.6;
    CHECK_THROWS_AS(generate_synthetic_stream(bad), std::invalid_argument);
}

TEST_CASE("synthetic ood stream carries no labels and validates") {
    auto ood = generate_synthetic_ood(500, 8, 3);
    CHECK(ood.size() == 500);
    for (const auto& p : ood.packets) CHECK(!p.label.has_value());
    ood.validate();
}
