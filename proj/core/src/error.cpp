#include "midthink/error.hpp"

namespace midthink {

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config:
            return 2;
        case ErrorKind::transport:
            return 3;
        case ErrorKind::input:
        case ErrorKind::data:
        case ErrorKind::protocol:
            return 4;
        case ErrorKind::capability:
        case ErrorKind::tokenizer:
        case ErrorKind::io:
            break;
    }
    return 1;
}

}  // namespace midthink
