#ifndef ETRIE_ETRIE_HPP
#define ETRIE_ETRIE_HPP

#include "etrie/change_detector.hpp"
#include "etrie/config.hpp"
#include "etrie/detector.hpp"
#include "etrie/events.hpp"
#include "etrie/hash.hpp"
#include "etrie/lpm_stage.hpp"
#include "etrie/notify.hpp"
#include "etrie/oracle.hpp"
#include "etrie/pcap.hpp"
#include "etrie/prefix.hpp"
#include "etrie/sim.hpp"
#include "etrie/spread_filter.hpp"
#include "etrie/synthetic.hpp"
#include "etrie/traces.hpp"
#include "etrie/trie.hpp"

#endif  // ETRIE_ETRIE_HPP
