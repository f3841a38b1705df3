#include "kddt/packet_data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kddt/rng.hpp"

namespace kddt {

void LabeledDataset::validate() const {
    std::uint64_t prev_ts = 0;
    bool first = true;
    for (std::size_t i = 0; i < packets.size(); ++i) {
        const auto& p = packets[i];
        if (!first && p.timestamp_us < prev_ts) {
            throw std::runtime_error("dataset: timestamp decreases at packet " + std::to_string(i));
        }
        prev_ts = p.timestamp_us;
        first = false;
        if (kind == DatasetKind::Ood) {
            if (p.label.has_value()) {
                throw std::runtime_error("dataset: out-of-domain packet " + std::to_string(i) +
                                         " carries a label");
            }
        } else if (!p.label.has_value()) {
            throw std::runtime_error("dataset: in-domain packet " + std::to_string(i) +
                                     " is missing a label");
        }
    }
}

Vocabulary::Vocabulary() {
    id_to_token_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
    id_to_token_.reserve(260);
    static const char* hex = "0123456789abcdef";
    for (int b = 0; b < 256; ++b) {
        std::string tok;
        tok += hex[(b >> 4) & 0xf];
        tok += hex[b & 0xf];
        id_to_token_.push_back(tok);
    }
}

int Vocabulary::encode(const std::string& token) const {
    for (int i = 0; i < static_cast<int>(id_to_token_.size()); ++i) {
        if (id_to_token_[i] == token) return i;
    }
    throw std::out_of_range("vocabulary: unknown token '" + token + "'");
}

const std::string& Vocabulary::decode(int id) const {
    if (id < 0 || id >= static_cast<int>(id_to_token_.size())) {
        throw std::out_of_range("vocabulary: id " + std::to_string(id) + " out of range");
    }
    return id_to_token_[id];
}

TokenizedPacket tokenize_packet(const RawPacket& p, const Vocabulary& vocab, int l_pkt) {
    if (l_pkt < 2) throw std::invalid_argument("tokenize_packet: packet length must be >= 2");
    TokenizedPacket tp;
    tp.ids.assign(l_pkt, Vocabulary::kPad);
    tp.ids[0] = Vocabulary::kBos;
    int pos = 1;
    for (std::uint8_t b : p.payload) {
        if (pos >= l_pkt) break;
        tp.ids[pos++] = vocab.byte_token(b);
    }
    if (pos < l_pkt && p.payload.size() <= static_cast<std::size_t>(l_pkt - 2)) {
        tp.ids[pos++] = Vocabulary::kEos;
    }
    tp.true_len = pos;
    return tp;
}

std::vector<std::uint8_t> detokenize_payload(const TokenizedPacket& tp, const Vocabulary& vocab) {
    std::vector<std::uint8_t> out;
    for (int i = 0; i < tp.true_len; ++i) {
        int id = tp.ids[i];
        if (vocab.is_special(id)) continue;
        out.push_back(static_cast<std::uint8_t>(id - 4));
    }
    return out;
}

std::pair<LabeledDataset, LabeledDataset> chronological_split(const LabeledDataset& ds,
                                                              double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("chronological_split: ratio must lie in (0, 1)");
    }
    std::size_t n = ds.packets.size();
    std::size_t n_train = static_cast<std::size_t>(ratio * static_cast<double>(n));
    if (n_train == 0 || n_train == n) {
        throw std::invalid_argument("chronological_split: a side of the split is empty");
    }
    LabeledDataset train, test;
    train.kind = DatasetKind::IdTrain;
    test.kind = DatasetKind::IdTest;
    train.packets.assign(ds.packets.begin(), ds.packets.begin() + n_train);
    test.packets.assign(ds.packets.begin() + n_train, ds.packets.end());
    return {std::move(train), std::move(test)};
}

// --- PCAP ---

namespace {

constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4u;

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_le32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_le16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace

std::vector<RawPacket> read_pcap(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("pcap: cannot open '" + path + "'");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 24) {
        throw std::runtime_error("pcap: file shorter than the 24-byte global header");
    }
    std::uint32_t magic = le32(buf.data());
    if (magic != kPcapMagic) {
        std::ostringstream os;
        os << "pcap: unsupported magic 0x" << std::hex << magic
           << " (only classic little-endian 0xa1b2c3d4 captures are supported)";
        throw std::runtime_error(os.str());
    }
    std::vector<RawPacket> packets;
    std::size_t off = 24;
    while (off < buf.size()) {
        if (off + 16 > buf.size()) {
            throw std::runtime_error("pcap: truncated record header at byte offset " +
                                     std::to_string(off));
        }
        std::uint32_t ts_sec = le32(&buf[off]);
        std::uint32_t ts_frac = le32(&buf[off + 4]);
        std::uint32_t incl_len = le32(&buf[off + 8]);
        off += 16;
        if (off + incl_len > buf.size()) {
            throw std::runtime_error("pcap: record data exceeds file size at byte offset " +
                                     std::to_string(off));
        }
        RawPacket p;
        p.timestamp_us = static_cast<std::uint64_t>(ts_sec) * 1000000ull + ts_frac;
        p.payload.assign(buf.begin() + off, buf.begin() + off + incl_len);
        packets.push_back(std::move(p));
        off += incl_len;
    }
    return packets;
}

void write_pcap(const std::vector<RawPacket>& packets, const std::string& path) {
    std::vector<unsigned char> out;
    put_le32(out, kPcapMagic);
    put_le16(out, 2);  // version 2.4
    put_le16(out, 4);
    put_le32(out, 0);      // thiszone
    put_le32(out, 0);      // sigfigs
    put_le32(out, 65535);  // snaplen
    put_le32(out, 1);      // network = Ethernet
    for (const auto& p : packets) {
        put_le32(out, static_cast<std::uint32_t>(p.timestamp_us / 1000000ull));
        put_le32(out, static_cast<std::uint32_t>(p.timestamp_us % 1000000ull));
        put_le32(out, static_cast<std::uint32_t>(p.payload.size()));
        put_le32(out, static_cast<std::uint32_t>(p.payload.size()));
        out.insert(out.end(), p.payload.begin(), p.payload.end());
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("pcap: cannot open '" + path + "' for writing");
    os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

// --- JSONL ---

namespace {

std::vector<std::uint8_t> decode_hex(const std::string& hex, std::size_t line_no) {
    if (hex.size() % 2 != 0) {
        throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                                 ": payload_hex has odd length");
    }
    auto nibble = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                                 ": invalid hex character '" + std::string(1, c) + "'");
    };
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    }
    return out;
}

}  // namespace

LabeledDataset read_jsonl(const std::string& path, DatasetKind kind) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("jsonl: cannot open '" + path + "'");
    LabeledDataset ds;
    ds.kind = kind;
    std::string line;
    std::size_t line_no = 0;
    bool have_prev = false;
    std::uint64_t prev_ts = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!obj.is_object() || !obj.contains("ts_us") || !obj.contains("payload_hex")) {
            throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                                     ": expected object with ts_us and payload_hex");
        }
        if (!obj["ts_us"].is_number_integer() || obj["ts_us"].get<std::int64_t>() < 0) {
            throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                                     ": ts_us must be a non-negative integer");
        }
        RawPacket p;
        p.timestamp_us = obj["ts_us"].get<std::uint64_t>();
        p.payload = decode_hex(obj["payload_hex"].get<std::string>(), line_no);
        if (obj.contains("label")) {
            int label = obj["label"].get<int>();
            if (label != 0 && label != 1) {
                throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                                         ": label must be 0 or 1");
            }
            if (kind == DatasetKind::Ood) {
                throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                                         ": unexpected label in an out-of-domain dataset");
            }
            p.label = label;
        } else if (kind != DatasetKind::Ood) {
            throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                                     ": missing label in an in-domain dataset");
        }
        if (have_prev && p.timestamp_us < prev_ts) {
            throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                                     ": timestamp decreases");
        }
        prev_ts = p.timestamp_us;
        have_prev = true;
        ds.packets.push_back(std::move(p));
    }
    return ds;
}

void write_jsonl(const LabeledDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("jsonl: cannot open '" + path + "' for writing");
    static const char* hex = "0123456789abcdef";
    for (const auto& p : ds.packets) {
        os << "{\"ts_us\":" << p.timestamp_us << ",\"payload_hex\":\"";
        for (std::uint8_t b : p.payload) {
            os << hex[(b >> 4) & 0xf] << hex[b & 0xf];
        }
        os << '"';
        if (p.label.has_value()) os << ",\"label\":" << *p.label;
        os << "}\n";
    }
    if (!os) throw std::runtime_error("jsonl: write failed for '" + path + "'");
}

std::vector<AnomalyWindow> read_anomaly_windows(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("windows: cannot open '" + path + "'");
    std::vector<AnomalyWindow> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("windows line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!obj.contains("start_us") || !obj.contains("end_us")) {
            throw std::runtime_error("windows line " + std::to_string(line_no) +
                                     ": expected start_us and end_us");
        }
        AnomalyWindow w;
        w.start_us = obj["start_us"].get<std::uint64_t>();
        w.end_us = obj["end_us"].get<std::uint64_t>();
        if (w.end_us < w.start_us) {
            throw std::runtime_error("windows line " + std::to_string(line_no) +
                                     ": end_us precedes start_us");
        }
        out.push_back(w);
    }
    return out;
}

void attach_labels(std::vector<RawPacket>& packets, const std::vector<AnomalyWindow>& windows) {
    for (auto& p : packets) {
        int label = 0;
        for (const auto& w : windows) {
            if (p.timestamp_us >= w.start_us && p.timestamp_us <= w.end_us) {
                label = 1;
                break;
            }
        }
        p.label = label;
    }
}

// --- Synthetic traffic ---

namespace {

// Each cycle: kActiveLen packets of ramping signal values, then kIdleLen
// packets where every signal legitimately rests at zero. Incident zeros are
// only distinguishable from scheduled idles by timing and run length.
constexpr int kActiveLen = 18;
constexpr int kIdleLen = 6;
constexpr int kCycle = kActiveLen + kIdleLen;

struct SignalModel {
    std::vector<int> step;
    std::vector<int> phase;

    SignalModel(int n_signals, Rng& rng) {
        for (int j = 0; j < n_signals; ++j) {
            step.push_back(2 * rng.uniform_int(1, 6) + 1);  // odd, 3..13
            phase.push_back(rng.uniform_int(0, 223));
        }
    }

    std::uint8_t value(int signal, long long i) const {
        if ((i % kCycle) >= kActiveLen) return 0;  // scheduled quiet phase
        long long v = (i * step[signal] + phase[signal]) % 224;
        return static_cast<std::uint8_t>(32 + v);
    }
};

bool active_phase(long long i) { return (i % kCycle) < kActiveLen; }

// A drop is only observable when the previous packet still carried live
// values, so runs begin at an active slot whose predecessor is active too.
bool incident_start_ok(long long i) {
    return (i % kCycle) >= 1 && (i % kCycle) < kActiveLen;
}

}  // namespace

LabeledDataset generate_synthetic_ood(int n_packets, int n_signals, std::uint64_t seed,
                                      std::uint64_t gap_us) {
    if (n_packets < 1 || n_signals < 1) {
        throw std::invalid_argument("synthetic: packet and signal counts must be positive");
    }
    Rng rng(seed);
    SignalModel model(n_signals, rng);
    LabeledDataset ds;
    ds.kind = DatasetKind::Ood;
    ds.packets.reserve(n_packets);
    for (int i = 0; i < n_packets; ++i) {
        RawPacket p;
        p.timestamp_us = static_cast<std::uint64_t>(i) * gap_us;
        p.payload.resize(n_signals);
        for (int j = 0; j < n_signals; ++j) p.payload[j] = model.value(j, i);
        ds.packets.push_back(std::move(p));
    }
    return ds;
}

LabeledDataset generate_synthetic_stream(const SyntheticConfig& cfg) {
    if (!(cfg.anomaly_ratio > 0.0 && cfg.anomaly_ratio < 0.5)) {
        throw std::invalid_argument("synthetic: anomaly_ratio must lie in (0, 0.5)");
    }
    if (cfg.mean_incident_len < 1) {
        throw std::invalid_argument("synthetic: mean_incident_len must be >= 1");
    }
    if (cfg.n_packets < 1 || cfg.n_signals < 1) {
        throw std::invalid_argument("synthetic: packet and signal counts must be positive");
    }
    double target_d = cfg.anomaly_ratio * cfg.n_packets;
    if (target_d < cfg.mean_incident_len) {
        throw std::invalid_argument(
            "synthetic: anomaly_ratio * n_packets smaller than one mean-length incident");
    }
    long long target = std::llround(target_d);

    Rng rng(cfg.seed);
    SignalModel model(cfg.n_signals, rng);

    // Geometric run lengths with the requested mean; the last run is clamped
    // so the abnormal fraction lands on target exactly.
    std::vector<long long> lengths;
    long long total = 0;
    std::geometric_distribution<long long> geom(
        cfg.mean_incident_len > 1 ? 1.0 / cfg.mean_incident_len : 0.5);
    while (total < target) {
        long long len = cfg.mean_incident_len > 1 ? 1 + geom(rng.engine()) : 1;
        if (total + len > target) len = target - total;
        if (len < 1) break;
        lengths.push_back(len);
        total += len;
    }

    // Place runs in order with randomized gaps, snapping starts into an
    // active phase so the drop is observable against live signals.
    std::vector<std::pair<long long, long long>> spans;  // [start, end)
    long long k = static_cast<long long>(lengths.size());
    long long cursor = 0;
    bool placed_all = true;
    for (long long idx = 0; idx < k; ++idx) {
        long long remaining = 0;
        for (long long j = idx; j < k; ++j) remaining += lengths[j];
        long long max_start = cfg.n_packets - remaining - (k - idx - 1);
        long long min_start = cursor + 1;
        if (min_start > max_start) {
            placed_all = false;
            break;
        }
        long long span_gap = (max_start - min_start) / std::max<long long>(1, k - idx);
        long long start = min_start + (span_gap > 0 ? rng.uniform_int(0, static_cast<int>(std::min<long long>(span_gap, 1 << 20))) : 0);
        while (start <= max_start && !incident_start_ok(start)) ++start;
        if (start > max_start) {
            // walk back to the nearest feasible active position
            start = std::min(start, max_start);
            while (start >= min_start && !incident_start_ok(start)) --start;
            if (start < min_start) {
                placed_all = false;
                break;
            }
        }
        spans.emplace_back(start, start + lengths[idx]);
        cursor = start + lengths[idx];
    }
    if (!placed_all || cursor > cfg.n_packets) {
        throw std::invalid_argument("synthetic: could not place incident runs; configuration too dense");
    }

    std::vector<int> label(cfg.n_packets, 0);
    for (const auto& [s, e] : spans) {
        for (long long i = s; i < e; ++i) label[i] = 1;
    }

    std::uint64_t gap_us = std::max<std::uint64_t>(
        1, cfg.mean_incident_duration_us / static_cast<std::uint64_t>(cfg.mean_incident_len));

    LabeledDataset ds;
    ds.kind = DatasetKind::IdTrain;
    ds.packets.reserve(cfg.n_packets);
    for (int i = 0; i < cfg.n_packets; ++i) {
        RawPacket p;
        p.timestamp_us = static_cast<std::uint64_t>(i) * gap_us;
        p.payload.resize(cfg.n_signals);
        for (int j = 0; j < cfg.n_signals; ++j) {
            p.payload[j] = label[i] ? 0 : model.value(j, i);
        }
        p.label = label[i];
        ds.packets.push_back(std::move(p));
    }
    return ds;
}

}  // namespace kddt
