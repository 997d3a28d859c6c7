#include "dnp3lab/codec.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>

namespace dnp3lab::codec {

std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::BadSync: return "BadSync";
        case Errc::HeaderCrcMismatch: return "HeaderCrcMismatch";
        case Errc::ChunkCrcMismatch: return "ChunkCrcMismatch";
        case Errc::TruncatedChunk: return "TruncatedChunk";
        case Errc::TruncatedFrame: return "TruncatedFrame";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::UnknownObjectLayout: return "UnknownObjectLayout";
        case Errc::MalformedObjectBlock: return "MalformedObjectBlock";
        case Errc::PayloadTooLarge: return "PayloadTooLarge";
        case Errc::InvalidField: return "InvalidField";
        case Errc::InvalidControlCode: return "InvalidControlCode";
        case Errc::NonFiniteValue: return "NonFiniteValue";
        case Errc::EmptyPointSet: return "EmptyPointSet";
        case Errc::DuplicatePoint: return "DuplicatePoint";
        case Errc::PointNotFound: return "PointNotFound";
    }
    return "Unknown";
}

// ---------------------------------------------------------------------------
// CRC

namespace {

constexpr std::uint16_t kReflectedPoly = 0xA6BC;  // bit-reverse of 0x3D65

constexpr std::array<std::uint16_t, 256> make_crc_table() {
    std::array<std::uint16_t, 256> table{};
    for (unsigned i = 0; i < 256; ++i) {
        std::uint16_t crc = static_cast<std::uint16_t>(i);
        for (int bit = 0; bit < 8; ++bit) {
            crc = (crc & 1) ? static_cast<std::uint16_t>((crc >> 1) ^ kReflectedPoly)
                            : static_cast<std::uint16_t>(crc >> 1);
        }
        table[i] = crc;
    }
    return table;
}

constexpr auto kCrcTable = make_crc_table();

}  // namespace

std::uint16_t crc16_dnp(ByteView data) {
    std::uint16_t crc = 0x0000;
    for (auto b : data) crc = static_cast<std::uint16_t>((crc >> 8) ^ kCrcTable[(crc ^ b) & 0xFF]);
    return static_cast<std::uint16_t>(~crc);
}

Bytes chunk_payload(ByteView payload) {
    Bytes out;
    out.reserve(payload.size() + (payload.size() + kBlockSize - 1) / kBlockSize * kCrcSize);
    for (std::size_t at = 0; at < payload.size(); at += kBlockSize) {
        auto block = payload.subspan(at, std::min(kBlockSize, payload.size() - at));
        out.insert(out.end(), block.begin(), block.end());
        put_u16le(out, crc16_dnp(block));
    }
    return out;
}

namespace {

Bytes unchunk(ByteView chunked, std::size_t wire_base, bool verify) {
    Bytes out;
    out.reserve(chunked.size());
    std::size_t ordinal = 0;
    for (std::size_t at = 0; at < chunked.size(); at += kChunkSize, ++ordinal) {
        std::size_t remaining = chunked.size() - at;
        if (remaining < kCrcSize + 1) {
            throw CodecError(Errc::TruncatedChunk,
                             fmt::format("trailing {} octet(s) cannot form a data chunk", remaining),
                             wire_base + at, ordinal);
        }
        std::size_t data_size = std::min(kBlockSize, remaining - kCrcSize);
        auto block = chunked.subspan(at, data_size);
        if (verify && crc16_dnp(block) != get_u16le(chunked, at + data_size)) {
            throw CodecError(Errc::ChunkCrcMismatch, fmt::format("CRC MISMATCH at chunk {}", ordinal),
                             wire_base + at, ordinal);
        }
        out.insert(out.end(), block.begin(), block.end());
    }
    return out;
}

}  // namespace

Bytes unchunk_payload(ByteView chunked) { return unchunk(chunked, 0, true); }

// ---------------------------------------------------------------------------
// Enumerations

bool is_known(FunctionCode fc) {
    auto v = static_cast<std::uint8_t>(fc);
    return v <= 0x09 || v == 0x10 || (v >= 0x13 && v <= 0x17) || v == 0x81 || v == 0x82;
}

std::string describe(FunctionCode fc) {
    const char* name = nullptr;
    switch (fc) {
        case FunctionCode::Confirm: name = "CONFIRM"; break;
        case FunctionCode::Read: name = "READ"; break;
        case FunctionCode::Write: name = "WRITE"; break;
        case FunctionCode::Select: name = "SELECT"; break;
        case FunctionCode::Operate: name = "OPERATE"; break;
        case FunctionCode::DirectOperate: name = "DIRECT_OPERATE"; break;
        case FunctionCode::DirectOperateNoAck: name = "DIRECT_OPERATE_NR"; break;
        case FunctionCode::Freeze: name = "FREEZE"; break;
        case FunctionCode::FreezeNoAck: name = "FREEZE_NR"; break;
        case FunctionCode::FreezeClear: name = "FREEZE_CLEAR"; break;
        case FunctionCode::FreezeClearNoAck: name = "FREEZE_CLEAR_NR"; break;
        case FunctionCode::ColdRestart: name = "COLD_RESTART"; break;
        case FunctionCode::EnableUnsolicited: name = "ENABLE_UNSOLICITED"; break;
        case FunctionCode::DisableUnsolicited: name = "DISABLE_UNSOLICITED"; break;
        case FunctionCode::AssignClass: name = "ASSIGN_CLASS"; break;
        case FunctionCode::DelayMeasure: name = "DELAY_MEASURE"; break;
        case FunctionCode::SolicitedResponse: name = "RESPONSE"; break;
        case FunctionCode::UnsolicitedResponse: name = "UNSOLICITED_RESPONSE"; break;
    }
    if (name == nullptr) return fmt::format("Unknown(0x{:02x})", static_cast<unsigned>(fc));
    return name;
}

std::string_view to_string(PointType t) {
    switch (t) {
        case PointType::BI: return "BI";
        case PointType::BO: return "BO";
        case PointType::AI: return "AI";
        case PointType::AO: return "AO";
        case PointType::Counter: return "CTR";
        case PointType::Class0: return "CLASS0";
    }
    return "?";
}

std::optional<PointType> point_type_from_tag(std::uint8_t tag) {
    switch (tag) {
        case 0x01: return PointType::BI;
        case 0x02: return PointType::BO;
        case 0x03: return PointType::AI;
        case 0x04: return PointType::AO;
        case 0x05: return PointType::Counter;
        case 0x3C: return PointType::Class0;
        default: return std::nullopt;
    }
}

std::optional<PointType> parse_point_type(std::string_view name) {
    for (auto t : {PointType::BI, PointType::BO, PointType::AI, PointType::AO, PointType::Counter}) {
        if (to_string(t) == name) return t;
    }
    return std::nullopt;
}

std::size_t point_width(PointType t) {
    switch (t) {
        case PointType::BI:
        case PointType::BO: return 1;
        case PointType::AI:
        case PointType::AO:
        case PointType::Counter: return 5;
        case PointType::Class0: return 0;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Framing

std::array<std::uint8_t, kHeaderSize> encode_link_header(const LinkHeader& header, std::size_t user_data_size) {
    if (user_data_size > kMaxUserData) {
        throw CodecError(Errc::PayloadTooLarge,
                         fmt::format("{} octets of user data exceed the {}-octet frame limit", user_data_size,
                                     kMaxUserData));
    }
    std::array<std::uint8_t, kHeaderSize> h{};
    h[0] = kSync0;
    h[1] = kSync1;
    h[2] = static_cast<std::uint8_t>(5 + user_data_size);
    h[3] = header.control;
    h[4] = static_cast<std::uint8_t>(header.destination & 0xFF);
    h[5] = static_cast<std::uint8_t>(header.destination >> 8);
    h[6] = static_cast<std::uint8_t>(header.source & 0xFF);
    h[7] = static_cast<std::uint8_t>(header.source >> 8);
    auto crc = crc16_dnp(ByteView(h.data(), 8));
    h[8] = static_cast<std::uint8_t>(crc & 0xFF);
    h[9] = static_cast<std::uint8_t>(crc >> 8);
    return h;
}

std::uint8_t TransportOctet::encode() const {
    if (sequence >= 64) {
        throw CodecError(Errc::InvalidField, fmt::format("transport sequence {} exceeds 6 bits", sequence));
    }
    return static_cast<std::uint8_t>((fin ? 0x80 : 0x00) | (fir ? 0x40 : 0x00) | sequence);
}

TransportOctet TransportOctet::decode(std::uint8_t octet) {
    return TransportOctet{(octet & 0x40) != 0, (octet & 0x80) != 0, static_cast<std::uint8_t>(octet & 0x3F)};
}

Bytes encode_application(const ApplicationFragment& app) {
    Bytes out;
    out.push_back(app.app_control);
    out.push_back(static_cast<std::uint8_t>(app.function));
    for (const auto& block : app.objects) {
        if (block.payload.size() != block.count * point_width(block.type)) {
            throw CodecError(Errc::MalformedObjectBlock,
                             fmt::format("{} block: payload of {} octets does not hold {} point(s)",
                                         to_string(block.type), block.payload.size(), block.count));
        }
        out.push_back(static_cast<std::uint8_t>(block.type));
        put_u16le(out, block.start_index);
        put_u16le(out, block.count);
        out.insert(out.end(), block.payload.begin(), block.payload.end());
    }
    return out;
}

ApplicationFragment decode_application(ByteView data, std::size_t base_offset) {
    if (data.size() < 2) {
        throw CodecError(Errc::TruncatedFrame, "application header needs 2 octets", base_offset);
    }
    ApplicationFragment app;
    app.app_control = data[0];
    app.function = static_cast<FunctionCode>(data[1]);
    std::size_t at = 2;
    while (at < data.size()) {
        if (data.size() - at < kObjectHeaderSize) {
            throw CodecError(Errc::UnknownObjectLayout,
                             fmt::format("{} trailing octet(s) do not form an object header", data.size() - at),
                             base_offset + at);
        }
        auto type = point_type_from_tag(data[at]);
        if (!type) {
            throw CodecError(Errc::UnknownObjectLayout, fmt::format("unknown object tag 0x{:02x}", data[at]),
                             base_offset + at);
        }
        ObjectBlock block;
        block.type = *type;
        block.start_index = get_u16le(data, at + 1);
        block.count = get_u16le(data, at + 3);
        std::size_t size = static_cast<std::size_t>(block.count) * point_width(block.type);
        at += kObjectHeaderSize;
        if (data.size() - at < size) {
            throw CodecError(Errc::UnknownObjectLayout,
                             fmt::format("{} block declares {} point(s) but only {} octet(s) remain",
                                         to_string(block.type), block.count, data.size() - at),
                             base_offset + at);
        }
        block.payload.assign(data.begin() + static_cast<std::ptrdiff_t>(at),
                             data.begin() + static_cast<std::ptrdiff_t>(at + size));
        at += size;
        app.objects.push_back(std::move(block));
    }
    return app;
}

Bytes user_data(const Dnp3Packet& packet) {
    Bytes out;
    out.push_back(packet.transport.encode());
    auto app = encode_application(packet.app);
    out.insert(out.end(), app.begin(), app.end());
    return out;
}

std::size_t encoded_size(std::size_t user_data_size) {
    return kHeaderSize + user_data_size + (user_data_size + kBlockSize - 1) / kBlockSize * kCrcSize;
}

std::size_t wire_offset(std::size_t user_offset) {
    return kHeaderSize + (user_offset / kBlockSize) * kChunkSize + user_offset % kBlockSize;
}

Bytes encode_frame(const Dnp3Packet& packet) {
    auto data = user_data(packet);
    auto header = encode_link_header(packet.link, data.size());
    Bytes out(header.begin(), header.end());
    auto chunks = chunk_payload(data);
    out.insert(out.end(), chunks.begin(), chunks.end());
    return out;
}

Dnp3Packet decode_frame(ByteView bytes, DecodeOptions options) {
    if (bytes.size() < 2) throw CodecError(Errc::TruncatedFrame, "frame shorter than the sync octets", 0);
    if (bytes[0] != kSync0 || bytes[1] != kSync1) {
        throw CodecError(Errc::BadSync, fmt::format("expected sync 05 64, found {:02x} {:02x}", bytes[0], bytes[1]),
                         bytes[0] != kSync0 ? 0 : 1);
    }
    if (bytes.size() < kHeaderSize) {
        throw CodecError(Errc::TruncatedFrame, fmt::format("link header needs 10 octets, have {}", bytes.size()), 0);
    }
    if (options.verify_crc && crc16_dnp(bytes.first(8)) != get_u16le(bytes, 8)) {
        throw CodecError(Errc::HeaderCrcMismatch, "link header CRC mismatch", 8);
    }
    std::uint8_t length = bytes[2];
    if (length < 5 + 3) {
        throw CodecError(Errc::TruncatedFrame,
                         fmt::format("length octet {} leaves no room for transport and application headers", length),
                         2);
    }
    std::size_t user_size = length - 5u;
    std::size_t expected = encoded_size(user_size);
    if (bytes.size() < expected) {
        throw CodecError(Errc::TruncatedFrame,
                         fmt::format("length octet implies {} octets, frame has {}", expected, bytes.size()),
                         bytes.size());
    }
    if (bytes.size() > expected) {
        throw CodecError(Errc::LengthMismatch,
                         fmt::format("{} octet(s) beyond the length declared in the header", bytes.size() - expected),
                         expected);
    }

    auto data = unchunk(bytes.subspan(kHeaderSize), kHeaderSize, options.verify_crc);

    Dnp3Packet packet;
    packet.link.control = bytes[3];
    packet.link.destination = get_u16le(bytes, 4);
    packet.link.source = get_u16le(bytes, 6);
    packet.transport = TransportOctet::decode(data[0]);
    packet.app = decode_application(ByteView(data).subspan(1), 1);
    return packet;
}

void write_user_data(Bytes& frame, std::size_t user_offset, ByteView replacement) {
    for (std::size_t i = 0; i < replacement.size(); ++i) {
        std::size_t at = wire_offset(user_offset + i);
        if (at >= frame.size()) {
            throw CodecError(Errc::TruncatedFrame, "edit runs past the end of the frame", at);
        }
        frame[at] = replacement[i];
    }
}

void refresh_chunk_crc(Bytes& frame, std::size_t chunk) {
    std::size_t start = kHeaderSize + chunk * kChunkSize;
    if (start + kCrcSize + 1 > frame.size()) {
        throw CodecError(Errc::TruncatedChunk, fmt::format("frame has no chunk {}", chunk), start, chunk);
    }
    std::size_t data_size = std::min(kBlockSize, frame.size() - start - kCrcSize);
    auto crc = crc16_dnp(ByteView(frame).subspan(start, data_size));
    frame[start + data_size] = static_cast<std::uint8_t>(crc & 0xFF);
    frame[start + data_size + 1] = static_cast<std::uint8_t>(crc >> 8);
}

std::vector<std::size_t> patch_user_data(Bytes& frame, std::size_t user_offset, ByteView replacement) {
    write_user_data(frame, user_offset, replacement);
    std::vector<std::size_t> touched;
    if (replacement.empty()) return touched;
    for (auto c = chunk_of(user_offset); c <= chunk_of(user_offset + replacement.size() - 1); ++c) {
        refresh_chunk_crc(frame, c);
        touched.push_back(c);
    }
    return touched;
}

// ---------------------------------------------------------------------------
// Points

std::array<std::uint8_t, 4> encode_float(float value) {
    auto bits = std::bit_cast<std::uint32_t>(value);
    return {static_cast<std::uint8_t>(bits), static_cast<std::uint8_t>(bits >> 8),
            static_cast<std::uint8_t>(bits >> 16), static_cast<std::uint8_t>(bits >> 24)};
}

float decode_float(ByteView four) { return std::bit_cast<float>(get_u32le(four, 0)); }

Dnp3Point Dnp3Point::binary(PointType type, std::uint16_t index, std::uint8_t octet) {
    Dnp3Point p;
    p.type = type;
    p.index = index;
    p.status = octet;
    return p;
}

Dnp3Point Dnp3Point::analog(PointType type, std::uint16_t index, float value, std::uint8_t status) {
    Dnp3Point p;
    p.type = type;
    p.index = index;
    p.status = status;
    p.value = value;
    return p;
}

bool Dnp3Point::same_reading(const Dnp3Point& other) const {
    return type == other.type && index == other.index && status == other.status &&
           (value == other.value || (std::isnan(value) && std::isnan(other.value)));
}

Bytes encode_point_value(const Dnp3Point& point) {
    Bytes out{point.status};
    if (is_binary(point.type)) return out;
    if (point.type == PointType::Counter) {
        put_u32le(out, static_cast<std::uint32_t>(point.value));
        return out;
    }
    for (auto b : encode_float(static_cast<float>(point.value))) out.push_back(b);
    return out;
}

namespace {

Dnp3Packet make_packet(std::uint16_t dest, std::uint16_t src, std::uint8_t link_control, FunctionCode fc) {
    Dnp3Packet p;
    p.link = LinkHeader{link_control, dest, src};
    p.app.function = fc;
    return p;
}

int canonical_rank(PointType t) {
    switch (t) {
        case PointType::BI: return 0;
        case PointType::AI: return 1;
        case PointType::BO: return 2;
        case PointType::AO: return 3;
        case PointType::Counter: return 4;
        case PointType::Class0: return 5;
    }
    return 6;
}

}  // namespace

Dnp3Packet build_direct_operate_binary(std::uint16_t dest, std::uint16_t src, std::uint16_t index,
                                       std::uint8_t control) {
    if (control != kControlClose && control != kControlTrip) {
        throw CodecError(Errc::InvalidControlCode,
                         fmt::format("control code 0x{:02x} is neither CLOSE (0x41) nor TRIP (0x81)", control));
    }
    auto p = make_packet(dest, src, kLinkFromMaster, FunctionCode::DirectOperate);
    p.app.objects.push_back(ObjectBlock{PointType::BO, index, 1, Bytes{control}});
    return p;
}

Dnp3Packet build_direct_operate_analog(std::uint16_t dest, std::uint16_t src, std::uint16_t index, float value) {
    if (!std::isfinite(value)) {
        throw CodecError(Errc::NonFiniteValue, "analog setpoint must be finite");
    }
    auto p = make_packet(dest, src, kLinkFromMaster, FunctionCode::DirectOperate);
    p.app.objects.push_back(
        ObjectBlock{PointType::AO, index, 1, encode_point_value(Dnp3Point::analog(PointType::AO, index, value))});
    return p;
}

Dnp3Packet build_read_request(std::uint16_t dest, std::uint16_t src) {
    auto p = make_packet(dest, src, kLinkFromMaster, FunctionCode::Read);
    p.app.objects.push_back(ObjectBlock{PointType::Class0, 0, 0, {}});
    return p;
}

Dnp3Packet build_read_response(std::uint16_t dest, std::uint16_t src, std::vector<Dnp3Point> points) {
    if (points.empty()) throw CodecError(Errc::EmptyPointSet, "read response needs at least one point");
    std::stable_sort(points.begin(), points.end(), [](const Dnp3Point& a, const Dnp3Point& b) {
        auto ra = canonical_rank(a.type), rb = canonical_rank(b.type);
        return ra != rb ? ra < rb : a.index < b.index;
    });
    auto p = make_packet(dest, src, kLinkFromOutstation, FunctionCode::SolicitedResponse);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& pt = points[i];
        if (pt.type == PointType::Class0) {
            throw CodecError(Errc::InvalidField, "Class0 is a poll designator, not a point type");
        }
        if (pt.type != PointType::Counter && !is_binary(pt.type) && !std::isfinite(pt.value)) {
            throw CodecError(Errc::NonFiniteValue, fmt::format("{}[{}] is not finite", to_string(pt.type), pt.index));
        }
        bool extends = false;
        if (i > 0 && points[i - 1].type == pt.type) {
            if (points[i - 1].index == pt.index) {
                throw CodecError(Errc::DuplicatePoint,
                                 fmt::format("{}[{}] listed twice", to_string(pt.type), pt.index));
            }
            extends = points[i - 1].index + 1 == pt.index;
        }
        if (!extends) p.app.objects.push_back(ObjectBlock{pt.type, pt.index, 0, {}});
        auto& block = p.app.objects.back();
        auto enc = encode_point_value(pt);
        block.payload.insert(block.payload.end(), enc.begin(), enc.end());
        ++block.count;
    }
    return p;
}

Dnp3Packet build_point_response(std::uint16_t dest, std::uint16_t src, const Dnp3Point& point) {
    auto p = make_packet(dest, src, kLinkFromOutstation, FunctionCode::SolicitedResponse);
    p.app.objects.push_back(ObjectBlock{point.type, point.index, 1, encode_point_value(point)});
    return p;
}

namespace {

std::vector<std::size_t> chunks_spanning(std::size_t offset, std::size_t length) {
    std::vector<std::size_t> out;
    for (auto c = chunk_of(offset); c <= chunk_of(offset + length - 1); ++c) out.push_back(c);
    return out;
}

// Calls fn(block, payload_user_offset) for each block; user offsets count
// the transport octet and the two application header octets.
template <typename Fn>
void for_each_block(const Dnp3Packet& packet, Fn&& fn) {
    std::size_t at = 1 + 2;
    for (const auto& block : packet.app.objects) {
        at += kObjectHeaderSize;
        fn(block, at);
        at += block.payload.size();
    }
}

}  // namespace

std::vector<Dnp3Point> parse_points(const Dnp3Packet& packet) {
    auto fc = packet.app.function;
    bool carries_points = fc == FunctionCode::SolicitedResponse || fc == FunctionCode::UnsolicitedResponse ||
                          fc == FunctionCode::Select || fc == FunctionCode::Operate ||
                          fc == FunctionCode::DirectOperate || fc == FunctionCode::DirectOperateNoAck;
    if (!carries_points) {
        throw CodecError(Errc::MalformedObjectBlock, fmt::format("{} does not carry point data", describe(fc)));
    }
    std::vector<Dnp3Point> points;
    for_each_block(packet, [&](const ObjectBlock& block, std::size_t base) {
        auto width = point_width(block.type);
        if (block.type == PointType::Class0 || block.payload.size() != block.count * width) {
            throw CodecError(Errc::MalformedObjectBlock,
                             fmt::format("{} block with {} point(s) and {} payload octet(s)", to_string(block.type),
                                         block.count, block.payload.size()));
        }
        for (std::uint16_t k = 0; k < block.count; ++k) {
            ByteView enc = ByteView(block.payload).subspan(k * width, width);
            Dnp3Point pt;
            pt.type = block.type;
            pt.index = static_cast<std::uint16_t>(block.start_index + k);
            pt.status = enc[0];
            if (block.type == PointType::Counter) {
                pt.value = static_cast<double>(get_u32le(enc, 1));
            } else if (is_analog(block.type)) {
                pt.value = static_cast<double>(decode_float(enc.subspan(1)));
            }
            pt.chunks = chunks_spanning(base + k * width, width);
            points.push_back(std::move(pt));
        }
    });
    return points;
}

PointLocation locate_point(const Dnp3Packet& packet, PointType type, std::uint16_t index) {
    std::optional<PointLocation> found;
    for_each_block(packet, [&](const ObjectBlock& block, std::size_t base) {
        if (found || block.type != type || type == PointType::Class0) return;
        if (index < block.start_index || index - block.start_index >= block.count) return;
        auto width = point_width(type);
        std::size_t point_at = base + static_cast<std::size_t>(index - block.start_index) * width;
        PointLocation loc;
        if (is_binary(type)) {
            loc.offset = point_at;
            loc.length = 1;
        } else {
            loc.offset = point_at + 1;
            loc.length = 4;
        }
        loc.chunks = chunks_spanning(loc.offset, loc.length);
        found = loc;
    });
    if (!found) {
        throw CodecError(Errc::PointNotFound, fmt::format("{}[{}] not present in packet", to_string(type), index));
    }
    return *found;
}

std::string summarize(const Dnp3Packet& packet) {
    std::string out = describe(packet.app.function);
    for (const auto& block : packet.app.objects) {
        if (block.type == PointType::Class0) {
            out += " class0";
            continue;
        }
        auto width = point_width(block.type);
        if (block.count == 1 && block.payload.size() == width) {
            if (is_binary(block.type)) {
                out += fmt::format(" {}[{}]=0x{:02x}", to_string(block.type), block.start_index, block.payload[0]);
            } else if (block.type == PointType::Counter) {
                out += fmt::format(" {}[{}]={}", to_string(block.type), block.start_index,
                                   get_u32le(block.payload, 1));
            } else {
                out += fmt::format(" {}[{}]={}", to_string(block.type), block.start_index,
                                   decode_float(ByteView(block.payload).subspan(1)));
            }
        } else {
            out += fmt::format(" {}[{}..{}]", to_string(block.type), block.start_index,
                               block.start_index + block.count - 1);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inspection

namespace {

std::string spaced_hex(ByteView data) {
    std::string out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (i) out.push_back(' ');
        out += fmt::format("{:02x}", data[i]);
    }
    return out;
}

}  // namespace

FrameReport inspect_frame(ByteView bytes) {
    FrameReport report;
    try {
        report.packet = decode_frame(bytes);
    } catch (const CodecError& e) {
        report.error = e;
    }
    report.sync_ok = bytes.size() >= 2 && bytes[0] == kSync0 && bytes[1] == kSync1;
    if (bytes.size() >= kHeaderSize) {
        report.header_crc_ok = crc16_dnp(bytes.first(8)) == get_u16le(bytes, 8);
        report.length = bytes[2];
        std::size_t ordinal = 0;
        for (std::size_t at = kHeaderSize; at + kCrcSize < bytes.size(); at += kChunkSize, ++ordinal) {
            std::size_t data_size = std::min(kBlockSize, bytes.size() - at - kCrcSize);
            auto block = bytes.subspan(at, data_size);
            report.chunks.push_back(
                ChunkVerdict{ordinal, at, data_size, crc16_dnp(block) == get_u16le(bytes, at + data_size)});
        }
    }
    if (!report.packet && report.sync_ok) {
        try {
            report.packet = decode_frame(bytes, DecodeOptions{false});
        } catch (const CodecError&) {
        }
    }
    return report;
}

std::string render_report(ByteView bytes, const FrameReport& report) {
    std::string out;
    if (bytes.size() >= kHeaderSize) {
        out += fmt::format("link       sync={:02x} {:02x} len={} ctrl=0x{:02x} dst={} src={} crc={}\n", bytes[0],
                           bytes[1], bytes[2], bytes[3], get_u16le(bytes, 4), get_u16le(bytes, 6),
                           report.header_crc_ok ? "ok" : "MISMATCH");
    }
    for (const auto& c : report.chunks) {
        out += fmt::format("chunk {:<4} @{:<4} {:>2} octets crc={}\n", c.ordinal, c.wire_offset, c.data_size,
                           c.crc_ok ? "ok" : "MISMATCH");
    }
    if (report.packet) {
        const auto& p = *report.packet;
        out += fmt::format("transport  fir={} fin={} seq={}\n", p.transport.fir ? 1 : 0, p.transport.fin ? 1 : 0,
                           p.transport.sequence);
        out += fmt::format("app        ctrl=0x{:02x} fc={} (0x{:02x})\n", p.app.app_control, describe(p.app.function),
                           static_cast<unsigned>(p.app.function));
        for (const auto& block : p.app.objects) {
            out += fmt::format("object     {} start={} count={}", to_string(block.type), block.start_index,
                               block.count);
            if (!block.payload.empty()) out += " : " + spaced_hex(block.payload);
            out += "\n";
        }
        out += fmt::format("summary    {}\n", summarize(p));
    }
    if (report.error) {
        const auto& e = *report.error;
        out += fmt::format("error      {}: {}", to_string(e.code()), e.what());
        if (e.offset()) out += fmt::format(" (offset {})", *e.offset());
        out += "\n";
    }
    out += "hex\n" + hex_dump(bytes) + "\n";
    return out;
}

}  // namespace dnp3lab::codec
