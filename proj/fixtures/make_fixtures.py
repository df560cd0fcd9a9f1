#!/usr/bin/env python3
"""Writes the hand-designed topologies used by the scenario tests.

peering3: AMS/BOS/CNF with two AMS transits, IXP peers and a route server.
supersite3: BOS/SEA/SLC where SEA and SLC sit close together.
"""
import json
import os
import sys

OUT = os.path.dirname(os.path.abspath(__file__))
ANYCAST = 47065


def node(asn, **kw):
    d = {"asn": asn}
    d.update(kw)
    return d


def cust(c, p):
    return {"from": c, "to": p, "relationship": "customer-of"}


def peer(a, b):
    return {"from": a, "to": b, "relationship": "peer"}


def peering3(sizes):
    tier1 = [1, 2, 3]
    nodes = [node(a, tier1=True) for a in tier1]
    links = [peer(1, 2), peer(1, 3), peer(2, 3)]
    # transits: 100 Transit-1, 101 Transit-2, 105 CNF upstream, 110 BOS upstream
    for a in (100, 101, 105, 110, 150, 160):
        nodes.append(node(a))
    links += [cust(100, 1), cust(101, 2), cust(105, 2), cust(105, 3), cust(110, 1), cust(110, 2), cust(110, 3)]
    # 160 reaches AMS through Transit-2 and CNF one hop further through 150
    links += [cust(150, 105), cust(160, 101), cust(160, 150)]
    nodes.append(node(300, route_server=True))
    clients = []
    groups = {
        # name: (asn, providers, extra links, count)
        "pb": (220, [110], "ams-peer"),
        "pc": (230, [105], "ams-peer"),
        "rs": (210, [2], "rs"),
        "a1": (240, [1], None),
        "a2": (250, [2], None),
        "a3": (260, [3], None),
        "bos": (270, [110], None),
        "cnf": (280, [105], None),
        "sap": (290, [3], "cnf-peer"),
        "d": (160, None, None),
    }
    ams_peers, cnf_peers = [], []
    for name, (asn, provs, kind) in groups.items():
        if provs is not None:
            nodes.append(node(asn))
            links += [cust(asn, p) for p in provs]
        if kind == "ams-peer":
            ams_peers.append(asn)
        elif kind == "cnf-peer":
            cnf_peers.append(asn)
        elif kind == "rs":
            links.append(peer(asn, 300))
        n = sizes.get(name, 0)
        if n:
            clients.append({"attach_asn": asn, "count": n, "block_prefix": name})
    # a second route-server member keeps the server meaningful
    nodes.append(node(211))
    links += [cust(211, 2), peer(211, 300)]
    sites = [
        {
            "site_id": "AMS",
            "host_asn": ANYCAST,
            "capacity": 60000,
            "neighbors": [
                {"asn": 100, "class": "transit", "label": "Transit-1"},
                {"asn": 101, "class": "transit", "label": "Transit-2"},
                {"asn": 300, "class": "route-server", "label": "Route-server"},
            ]
            + [{"asn": a, "class": "peer", "label": "IXP-%d" % a} for a in ams_peers],
        },
        {
            "site_id": "BOS",
            "host_asn": ANYCAST,
            "capacity": 60000,
            "supports_selective": False,
            "supports_poisoning": False,
            "neighbors": [{"asn": 110, "class": "transit", "label": "Transit-BOS"}],
        },
        {
            "site_id": "CNF",
            "host_asn": ANYCAST,
            "capacity": 60000,
            "supports_selective": False,
            "supports_poisoning": False,
            "neighbors": [{"asn": 105, "class": "transit", "label": "Transit-CNF"}]
            + [{"asn": a, "class": "peer", "label": "IXP-%d" % a} for a in cnf_peers],
        },
    ]
    return {"nodes": nodes, "links": links, "sites": sites, "clients": clients}


PEERING3_SIZES = {"pb": 46, "pc": 6, "rs": 4, "a1": 64, "a2": 20, "a3": 2, "bos": 20, "cnf": 22, "d": 16}


def supersite3():
    nodes = [node(a, tier1=True) for a in (1, 2, 3)]
    links = [peer(1, 2), peer(1, 3), peer(2, 3)]
    # 100 SEA upstream, 101 SLC upstream, 110 BOS upstream
    for a in (100, 101, 110):
        nodes.append(node(a))
    links += [cust(100, 1), cust(101, 1), cust(110, 1), cust(110, 2), cust(110, 3)]
    # 200: west coast regional, multihomed to both west upstreams and a Tier-1
    # 201: single-homed behind SLC's upstream
    # 210: SEA IXP peer; 220: east coast
    for a in (200, 201, 210, 220):
        nodes.append(node(a))
    links += [cust(200, 100), cust(200, 101), cust(200, 3), cust(201, 101), cust(210, 101), cust(220, 110)]
    clients = [
        {"attach_asn": 200, "count": 35, "block_prefix": "west"},
        {"attach_asn": 210, "count": 5, "block_prefix": "seapeer"},
        {"attach_asn": 201, "count": 30, "block_prefix": "slc"},
        {"attach_asn": 220, "count": 30, "block_prefix": "east"},
    ]
    flags = {"supports_selective": False, "supports_poisoning": False}
    sites = [
        dict(site_id="BOS", host_asn=ANYCAST, capacity=1500000, neighbors=[{"asn": 110, "label": "Transit-BOS"}], **flags),
        dict(site_id="SEA", host_asn=ANYCAST, capacity=700000,
             neighbors=[{"asn": 100, "label": "Transit-SEA"}, {"asn": 210, "class": "peer", "label": "IXP-210"}], **flags),
        dict(site_id="SLC", host_asn=ANYCAST, capacity=700000, neighbors=[{"asn": 101, "label": "Transit-SLC"}], **flags),
    ]
    return {"nodes": nodes, "links": links, "sites": sites, "clients": clients}


# Fractions (percent) as printed in the policy table; bins are 10 wide so the
# printed midpoints sit in the middle of each bin. Row a is "~5/~35/~55" in the
# source table: treated as exact here.
REFERENCE_ROWS = [
    ("a", "6peers, 12peers", 5, 35, 55, {"AMS": {"announce_to": [220, 230]}}),
    ("b", "Route-server", 15, 35, 55, {"AMS": {"announce_to": [300]}}),
    ("c", "All-IXP-Peers/Poison transits", 15, 35, 45, {"AMS": {"announce_to": [220, 230, 300]}}),
    ("d", "3xPrepend AMS", 15, 35, 45, {"AMS": {"prepend": 3}}),
    ("e", "2xPrepend AMS", 25, 35, 45, {"AMS": {"prepend": 2}}),
    ("f", "1xPrepend AMS", 35, 25, 35, {"AMS": {"prepend": 1}}),
    ("g", "-3xPrepend BOS", 25, 65, 5, {"AMS": {"prepend": 3}, "CNF": {"prepend": 3}}),
    ("h", "-2xPrepend BOS", 35, 65, 5, {"AMS": {"prepend": 2}, "CNF": {"prepend": 2}}),
    ("i", "-1xPrepend BOS", 45, 45, 15, {"AMS": {"prepend": 1}, "CNF": {"prepend": 1}}),
    ("j", "-3xPrepend CNF", 25, 15, 65, {"AMS": {"prepend": 3}, "BOS": {"prepend": 3}}),
    ("k", "-2xPrepend CNF", 35, 5, 55, {"AMS": {"prepend": 2}, "BOS": {"prepend": 2}}),
    ("l", "-1xPrepend CNF", 45, 5, 45, {"AMS": {"prepend": 1}, "BOS": {"prepend": 1}}),
    ("m", "Transit-1", 45, 25, 35, {"AMS": {"announce_to": [100]}}),
    ("n", "Transit-2", 55, 15, 25, {"AMS": {"announce_to": [101]}}),
    ("o", "Poison Tier-1/Transit-2", 35, 25, 35, {"AMS": {"poison": [2]}}),
    ("p", "Poison Transit-1", 55, 25, 25, {"AMS": {"poison": [100]}}),
    ("q", "Baseline", 65, 15, 15, {}),
    ("r", "1,2xPrepend BOS", 65, 5, 25, {"BOS": {"prepend": 1}}),
    ("s", "3xPrepend BOS", 75, 5, 25, {"BOS": {"prepend": 3}}),
    ("t", "1,2,3xPrepend CNF", 75, 15, 5, {"CNF": {"prepend": 1}}),
    ("u", "-1,-2,-3xPrepend AMS", 85, 5, 5, {"BOS": {"prepend": 1}, "CNF": {"prepend": 1}}),
]


def reference_playbook():
    entries = []
    for pid, label, ams, bos, cnf, actions in REFERENCE_ROWS:
        per_site = {}
        for site in ("AMS", "BOS", "CNF"):
            p = {"prepend": 0, "withdrawn": False, "announce_to": "all", "poison": []}
            p.update(actions.get(site, {}))
            per_site[site] = p
        entries.append({
            "config": {"policy_id": pid, "label": label, "per_site": per_site},
            "fractions": {"AMS": ams / 100, "BOS": bos / 100, "CNF": cnf / 100},
            "measured_at": "2017-03-01T00:00:00Z",
        })
    return {
        "format": "anycast-playbook",
        "version": 1,
        "note": "fractions injected from published measurements, not simulated; row a values are approximate",
        "baseline_id": "q",
        "default_view": "block",
        "entries": entries,
    }


def main():
    sizes = dict(PEERING3_SIZES)
    for arg in sys.argv[1:]:
        k, v = arg.split("=")
        sizes[k] = int(v)
    with open(os.path.join(OUT, "peering3.json"), "w") as f:
        json.dump(peering3(sizes), f, indent=1)
        f.write("\n")
    with open(os.path.join(OUT, "supersite3.json"), "w") as f:
        json.dump(supersite3(), f, indent=1)
        f.write("\n")
    with open(os.path.join(OUT, "reference_playbook.json"), "w") as f:
        json.dump(reference_playbook(), f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
