// Copyright 2026 The mcquic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <string>

// Bundled scenarios. They double as the acceptance suite and as worked
// examples of the scenario schema (docs/scenario.md).

namespace mcquic {

inline const std::map<std::string, std::string>& builtin_scenarios() {
  static const std::map<std::string, std::string> scenarios = {
      {"smoke", R"json({
  "name": "smoke",
  "seed": 1,
  "duration_ms": 15000,
  "network": {"uplink": {"delay_us": 2000}, "membership_latency_us": 10000},
  "channels": [
    {"id": "0a", "source": "10.0.0.1", "group": "232.1.1.1", "port": 5001,
     "rate_kbps": 8000, "aead": "aes128gcm", "hash": "sha256"}
  ],
  "clients": [
    {"count": 3, "link": {"delay_us": 5000},
     "limits": {"max_rate_kbps": 50000}}
  ],
  "workload": [
    {"content": "0a", "stream_id": 3, "bytes": 262144, "segment_bytes": 65536,
     "start_ms": 500, "interval_ms": 100}
  ]
})json"},

      {"stream_100_clients", R"json({
  "name": "stream_100_clients",
  "seed": 7,
  "duration_ms": 20000,
  "network": {"uplink": {"delay_us": 2000}, "membership_latency_us": 10000},
  "channels": [
    {"id": "0a", "source": "10.0.0.1", "group": "232.1.1.1", "port": 5001,
     "rate_kbps": 8000, "aead": "aes128gcm", "hash": "sha256"}
  ],
  "clients": [
    {"count": 100, "link": {"delay_us": 5000},
     "limits": {"max_rate_kbps": 50000}}
  ],
  "workload": [
    {"content": "0a", "stream_id": 3, "bytes": 1048576, "segment_bytes": 65536,
     "start_ms": 500, "interval_ms": 100}
  ]
})json"},

      {"no_multicast_network", R"json({
  "name": "no_multicast_network",
  "seed": 11,
  "duration_ms": 20000,
  "network": {"uplink": {"delay_us": 2000}, "membership_latency_us": 10000},
  "server": {"join_timeout_ms": 3000},
  "channels": [
    {"id": "0a", "source": "10.0.0.1", "group": "232.1.1.1", "port": 5001,
     "rate_kbps": 8000, "aead": "aes128gcm", "hash": "sha256"}
  ],
  "clients": [
    {"count": 3, "link": {"delay_us": 5000}, "multicast_capable": false,
     "limits": {"max_rate_kbps": 50000}}
  ],
  "workload": [
    {"content": "0a", "stream_id": 3, "bytes": 524288, "segment_bytes": 65536,
     "start_ms": 500, "interval_ms": 100}
  ]
})json"},

      {"attacker_flood", R"json({
  "name": "attacker_flood",
  "seed": 23,
  "duration_ms": 60000,
  "network": {"uplink": {"delay_us": 2000}, "membership_latency_us": 10000},
  "channels": [
    {"id": "0a", "source": "10.0.0.1", "group": "232.1.1.1", "port": 5001,
     "rate_kbps": 8000, "aead": "aes128gcm", "hash": "sha256"}
  ],
  "clients": [
    {"count": 3, "link": {"delay_us": 5000},
     "limits": {"max_rate_kbps": 50000}}
  ],
  "workload": [
    {"content": "0a", "stream_id": 3, "bytes": 2097152, "segment_bytes": 65536,
     "start_ms": 500, "interval_ms": 100}
  ],
  "attacker": {"rate_per_s": 1000, "generators": ["random", "bitflip", "replay"],
               "target_channel": "0a", "start_ms": 0}
})json"},

      {"lossy_links", R"json({
  "name": "lossy_links",
  "seed": 31,
  "duration_ms": 60000,
  "network": {"uplink": {"delay_us": 2000}, "membership_latency_us": 10000},
  "channels": [
    {"id": "0a", "source": "10.0.0.1", "group": "232.1.1.1", "port": 5001,
     "rate_kbps": 40000, "aead": "aes128gcm", "hash": "sha256"}
  ],
  "clients": [
    {"count": 10, "link": {"delay_us": 5000, "loss": 0.05},
     "limits": {"max_rate_kbps": 50000}}
  ],
  "workload": [
    {"content": "0a", "stream_id": 3, "bytes": 10485760, "segment_bytes": 131072,
     "start_ms": 500, "interval_ms": 50}
  ]
})json"},

      {"budget_mix", R"json({
  "name": "budget_mix",
  "seed": 43,
  "duration_ms": 20000,
  "network": {"uplink": {"delay_us": 2000}, "membership_latency_us": 10000},
  "channels": [
    {"id": "4b", "source": "10.0.0.1", "group": "232.1.1.4", "port": 5004,
     "rate_kbps": 40000, "aead": "aes128gcm", "hash": "sha256"},
    {"id": "8d", "source": "10.0.0.1", "group": "232.1.1.8", "port": 5008,
     "rate_kbps": 8000, "aead": "aes128gcm", "hash": "sha256"},
    {"id": "2c", "source": "10.0.0.1", "group": "232.1.1.2", "port": 5002,
     "rate_kbps": 2000, "aead": "aes128gcm", "hash": "sha256"}
  ],
  "content": [{"name": "stream", "channels": ["4b", "8d", "2c"]}],
  "clients": [
    {"count": 1, "link": {"delay_us": 5000}, "limits": {"max_rate_kbps": 50000}},
    {"count": 1, "link": {"delay_us": 5000}, "limits": {"max_rate_kbps": 30000}},
    {"count": 1, "link": {"delay_us": 5000}, "limits": {"max_rate_kbps": 1000}}
  ],
  "workload": [
    {"content": "stream", "stream_id": 3, "bytes": 262144, "segment_bytes": 65536,
     "start_ms": 500, "interval_ms": 100}
  ]
})json"},

      {"forward_secrecy", R"json({
  "name": "forward_secrecy",
  "seed": 53,
  "duration_ms": 20000,
  "network": {"uplink": {"delay_us": 2000}, "membership_latency_us": 10000},
  "server": {"rotation_interval_packets": 192, "unicast_only_every": 4},
  "channels": [
    {"id": "0a", "source": "10.0.0.1", "group": "232.1.1.1", "port": 5001,
     "rate_kbps": 8000, "aead": "aes128gcm", "hash": "sha256"}
  ],
  "clients": [
    {"count": 1, "link": {"delay_us": 5000},
     "limits": {"max_rate_kbps": 50000}, "disconnect_unicast_at_ms": 1000},
    {"count": 1, "link": {"delay_us": 5000},
     "limits": {"max_rate_kbps": 50000}}
  ],
  "workload": [
    {"content": "0a", "stream_id": 3, "bytes": 1572864, "segment_bytes": 65536,
     "start_ms": 500, "interval_ms": 60}
  ],
  "expect_complete_delivery": false
})json"},
  };
  return scenarios;
}

}  // namespace mcquic
