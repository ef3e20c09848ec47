#include "chartsum/util.hpp"

#include "chartsum/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <thread>

namespace chartsum {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Io: return "Io";
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::EmptyDialogue: return "EmptyDialogue";
        case ErrorKind::CorpusTooSmall: return "CorpusTooSmall";
        case ErrorKind::MalformedFile: return "MalformedFile";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::UnmappedSection: return "UnmappedSection";
        case ErrorKind::AliasConflict: return "AliasConflict";
        case ErrorKind::EmptyEvaluation: return "EmptyEvaluation";
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::SequenceTooLong: return "SequenceTooLong";
        case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::SectionNeverObserved: return "SectionNeverObserved";
        case ErrorKind::MissingReference: return "MissingReference";
    }
    return "Unknown";
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    {
        std::vector<std::jthread> workers;
        workers.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&, w] {
                for (std::size_t i = w; i < count; i += jobs) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::string round_half_up(double value, int decimals) {
    if (!std::isfinite(value)) {
        throw Error(ErrorKind::InvalidArgument, "cannot round a non-finite value");
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    std::string text(buf, res.ptr);

    bool negative = !text.empty() && text[0] == '-';
    if (negative) {
        text.erase(0, 1);
    }
    auto dot = text.find('.');
    std::string int_part = dot == std::string::npos ? text : text.substr(0, dot);
    std::string frac = dot == std::string::npos ? std::string() : text.substr(dot + 1);
    const auto places = static_cast<std::size_t>(decimals);
    bool round_up = frac.size() > places && frac[places] >= '5';
    frac.resize(places, '0');

    std::string digits = int_part + frac;
    if (round_up) {
        int i = static_cast<int>(digits.size()) - 1;
        for (; i >= 0; --i) {
            if (digits[static_cast<std::size_t>(i)] == '9') {
                digits[static_cast<std::size_t>(i)] = '0';
            } else {
                ++digits[static_cast<std::size_t>(i)];
                break;
            }
        }
        if (i < 0) {
            digits.insert(digits.begin(), '1');
        }
    }
    std::string out = digits.substr(0, digits.size() - places);
    if (places > 0) {
        out += '.';
        out += digits.substr(digits.size() - places);
    }
    bool all_zero = std::all_of(digits.begin(), digits.end(), [](char c) { return c == '0'; });
    return (negative && !all_zero ? "-" : "") + out;
}

}  // namespace chartsum
