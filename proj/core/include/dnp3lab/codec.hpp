#pragma once

// DNP3 link / transport / application framing.
//
// Wire layout of one frame:
//
//   05 64 LEN CTRL DST(le16) SRC(le16) CRC(le16)        10-octet link header
//   [ up to 16 user-data octets ] CRC(le16)            repeated data chunks
//
// User data is the transport octet followed by the application fragment:
//
//   APP_CTRL FC { TAG START(le16) COUNT(le16) PAYLOAD }*
//
// The object header is a simplified stand-in for DNP3 group/variation:
// TAG is the PointType value, PAYLOAD is COUNT fixed-width point encodings
// (binary: 1 octet, analog/counter: 1 status octet + 4 value octets).
// A READ carries a single Class0 designator block (COUNT = 0).

#include "dnp3lab/bytes.hpp"
#include "dnp3lab/error.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dnp3lab::codec {

inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::size_t kBlockSize = 16;
inline constexpr std::size_t kCrcSize = 2;
inline constexpr std::size_t kChunkSize = kBlockSize + kCrcSize;
inline constexpr std::size_t kMaxUserData = 250;  // length octet = 5 + user data <= 255
inline constexpr std::uint8_t kSync0 = 0x05;
inline constexpr std::uint8_t kSync1 = 0x64;

inline constexpr std::uint8_t kControlClose = 0x41;
inline constexpr std::uint8_t kControlTrip = 0x81;

inline constexpr std::uint8_t kLinkFromMaster = 0xC4;      // DIR | PRM | unconfirmed user data
inline constexpr std::uint8_t kLinkFromOutstation = 0x44;  // PRM | unconfirmed user data

inline constexpr std::uint8_t kAppFir = 0x80;
inline constexpr std::uint8_t kAppFin = 0x40;

static_assert(kChunkSize - kCrcSize == 16);

enum class Errc {
    BadSync,
    HeaderCrcMismatch,
    ChunkCrcMismatch,
    TruncatedChunk,
    TruncatedFrame,
    LengthMismatch,
    UnknownObjectLayout,
    MalformedObjectBlock,
    PayloadTooLarge,
    InvalidField,
    InvalidControlCode,
    NonFiniteValue,
    EmptyPointSet,
    DuplicatePoint,
    PointNotFound,
};

std::string_view to_string(Errc code);

class CodecError : public CodedError<Errc> {
public:
    CodecError(Errc code, const std::string& what, std::optional<std::size_t> offset = std::nullopt,
               std::optional<std::size_t> chunk = std::nullopt)
        : CodedError(code, what), offset_(offset), chunk_(chunk) {}

    /// Octet offset into the input where the problem was found, when known.
    std::optional<std::size_t> offset() const noexcept { return offset_; }
    /// Chunk ordinal for chunk-level failures.
    std::optional<std::size_t> chunk() const noexcept { return chunk_; }

private:
    std::optional<std::size_t> offset_;
    std::optional<std::size_t> chunk_;
};

// ---------------------------------------------------------------------------
// CRC

/// CRC-16/DNP: poly 0x3D65 reflected, init 0x0000, xorout 0xFFFF.
std::uint16_t crc16_dnp(ByteView data);

/// Splits into <=16-octet blocks, each followed by its little-endian CRC.
Bytes chunk_payload(ByteView payload);

/// Inverse of chunk_payload. Verifies every chunk CRC.
Bytes unchunk_payload(ByteView chunked);

// ---------------------------------------------------------------------------
// Packet model

enum class FunctionCode : std::uint8_t {
    Confirm = 0x00,
    Read = 0x01,
    Write = 0x02,
    Select = 0x03,
    Operate = 0x04,
    DirectOperate = 0x05,
    DirectOperateNoAck = 0x06,
    Freeze = 0x07,
    FreezeNoAck = 0x08,
    FreezeClear = 0x09,
    FreezeClearNoAck = 0x10,
    ColdRestart = 0x13,
    EnableUnsolicited = 0x14,
    DisableUnsolicited = 0x15,
    AssignClass = 0x16,
    DelayMeasure = 0x17,
    SolicitedResponse = 0x81,
    UnsolicitedResponse = 0x82,
};

/// False for codes outside the enumerated set; such values are carried
/// through decode/encode unchanged and reported as Unknown(0xNN).
bool is_known(FunctionCode fc);
std::string describe(FunctionCode fc);

enum class PointType : std::uint8_t {
    BI = 0x01,
    BO = 0x02,
    AI = 0x03,
    AO = 0x04,
    Counter = 0x05,
    Class0 = 0x3C,  // poll designator, carries no points
};

std::string_view to_string(PointType t);
std::optional<PointType> point_type_from_tag(std::uint8_t tag);
std::optional<PointType> parse_point_type(std::string_view name);
std::size_t point_width(PointType t);
inline bool is_binary(PointType t) { return t == PointType::BI || t == PointType::BO; }
inline bool is_analog(PointType t) { return t == PointType::AI || t == PointType::AO; }

struct LinkHeader {
    std::uint8_t control = kLinkFromMaster;
    std::uint16_t destination = 0;
    std::uint16_t source = 0;

    friend bool operator==(const LinkHeader&, const LinkHeader&) = default;
};

/// Length octet and header CRC are derived from the header fields and the
/// amount of user data that follows.
std::array<std::uint8_t, kHeaderSize> encode_link_header(const LinkHeader& header, std::size_t user_data_size);

struct TransportOctet {
    bool fir = true;
    bool fin = true;
    std::uint8_t sequence = 0;  // 6 bits

    std::uint8_t encode() const;
    static TransportOctet decode(std::uint8_t octet);
    friend bool operator==(const TransportOctet&, const TransportOctet&) = default;
};

struct ObjectBlock {
    PointType type = PointType::BI;
    std::uint16_t start_index = 0;
    std::uint16_t count = 0;
    Bytes payload;

    friend bool operator==(const ObjectBlock&, const ObjectBlock&) = default;
};

inline constexpr std::size_t kObjectHeaderSize = 5;

struct ApplicationFragment {
    std::uint8_t app_control = kAppFir | kAppFin;
    FunctionCode function = FunctionCode::Confirm;
    std::vector<ObjectBlock> objects;

    std::uint8_t app_sequence() const { return app_control & 0x0F; }
    friend bool operator==(const ApplicationFragment&, const ApplicationFragment&) = default;
};

struct Dnp3Packet {
    LinkHeader link;
    TransportOctet transport;
    ApplicationFragment app;

    friend bool operator==(const Dnp3Packet&, const Dnp3Packet&) = default;
};

Bytes encode_application(const ApplicationFragment& app);
ApplicationFragment decode_application(ByteView data, std::size_t base_offset = 0);

/// Transport octet followed by the encoded application fragment: the octets
/// that get chunked onto the wire.
Bytes user_data(const Dnp3Packet& packet);

Bytes encode_frame(const Dnp3Packet& packet);

struct DecodeOptions {
    bool verify_crc = true;
};

Dnp3Packet decode_frame(ByteView bytes, DecodeOptions options = {});

/// Total encoded size for a given amount of user data.
std::size_t encoded_size(std::size_t user_data_size);
/// Wire offset of a user-data octet.
std::size_t wire_offset(std::size_t user_offset);
inline std::size_t chunk_of(std::size_t user_offset) { return user_offset / kBlockSize; }

/// Overwrites user-data octets of an encoded frame in place. CRCs are left
/// untouched; callers follow up with refresh_chunk_crc.
void write_user_data(Bytes& frame, std::size_t user_offset, ByteView replacement);
/// Recomputes the CRC of one data chunk of an encoded frame.
void refresh_chunk_crc(Bytes& frame, std::size_t chunk);
/// write_user_data + refresh of every touched chunk. Returns the chunk
/// ordinals that were rewritten.
std::vector<std::size_t> patch_user_data(Bytes& frame, std::size_t user_offset, ByteView replacement);

// ---------------------------------------------------------------------------
// Points

struct Dnp3Point {
    PointType type = PointType::BI;
    std::uint16_t index = 0;
    /// Binary: the control/status octet. Analog and counter: the status octet.
    std::uint8_t status = 0;
    /// Analog: IEEE-754 single value widened to double. Counter: the count.
    double value = 0.0;
    /// Chunk ordinals holding the encoded point (two when it straddles).
    std::vector<std::size_t> chunks;

    static Dnp3Point binary(PointType type, std::uint16_t index, std::uint8_t octet);
    static Dnp3Point analog(PointType type, std::uint16_t index, float value, std::uint8_t status = 0x00);

    /// Equal type, index, status and value (chunk placement ignored).
    bool same_reading(const Dnp3Point& other) const;
    friend bool operator==(const Dnp3Point&, const Dnp3Point&) = default;
};

/// Octets for one point as carried in an object block payload.
Bytes encode_point_value(const Dnp3Point& point);

Dnp3Packet build_direct_operate_binary(std::uint16_t dest, std::uint16_t src, std::uint16_t index,
                                       std::uint8_t control);
Dnp3Packet build_direct_operate_analog(std::uint16_t dest, std::uint16_t src, std::uint16_t index, float value);
Dnp3Packet build_read_request(std::uint16_t dest, std::uint16_t src);
/// Points are placed in canonical BI, AI, BO, AO (then Counter) order, one
/// object block per run of consecutive indices.
Dnp3Packet build_read_response(std::uint16_t dest, std::uint16_t src, std::vector<Dnp3Point> points);
/// Solicited response carrying a single point (used to echo an operate).
Dnp3Packet build_point_response(std::uint16_t dest, std::uint16_t src, const Dnp3Point& point);

/// Points of a response or control request, with chunk placement computed against the wire
/// layout of the packet.
std::vector<Dnp3Point> parse_points(const Dnp3Packet& packet);

struct PointLocation {
    /// Offset into user data (transport octet at 0) of the mutable octets:
    /// the control octet for binary points, the 4 value octets otherwise.
    std::size_t offset = 0;
    std::size_t length = 0;
    /// Chunks whose CRC must be recomputed after editing those octets.
    std::vector<std::size_t> chunks;

    friend bool operator==(const PointLocation&, const PointLocation&) = default;
};

PointLocation locate_point(const Dnp3Packet& packet, PointType type, std::uint16_t index);

/// Point octets are little-endian IEEE-754 single precision.
std::array<std::uint8_t, 4> encode_float(float value);
float decode_float(ByteView four);

/// Short one-line description, e.g. "DIRECT_OPERATE BO[7]=0x41".
std::string summarize(const Dnp3Packet& packet);

// ---------------------------------------------------------------------------
// Inspection

struct ChunkVerdict {
    std::size_t ordinal = 0;
    std::size_t wire_offset = 0;
    std::size_t data_size = 0;
    bool crc_ok = false;
};

struct FrameReport {
    bool sync_ok = false;
    bool header_crc_ok = false;
    std::optional<std::uint8_t> length;
    std::vector<ChunkVerdict> chunks;
    std::optional<Dnp3Packet> packet;  // set when the frame decodes with CRCs ignored
    std::optional<CodecError> error;   // first error from a strict decode
};

/// Decodes as much as possible, recording per-chunk CRC verdicts instead of
/// stopping at the first mismatch.
FrameReport inspect_frame(ByteView bytes);
std::string render_report(ByteView bytes, const FrameReport& report);

}  // namespace dnp3lab::codec
