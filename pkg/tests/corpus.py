"""Small regular graphs (n <= 12) shared by the oracle-equivalence tests."""
from trcolor.graph import blow_up, complete_multipartite, cycle, disjoint_union, petersen, random_regular

CORPUS = {
    "K3": complete_multipartite(3, 1),
    "K4": complete_multipartite(4, 1),
    "C4": cycle(4),
    "C5": cycle(5),
    "C6": cycle(6),
    "K222": complete_multipartite(3, 2),
    "K333": complete_multipartite(3, 3),
    "K444": complete_multipartite(3, 4),
    "K33": complete_multipartite(2, 3),
    "K55": complete_multipartite(2, 5),
    "petersen": petersen(),
    "2xK3": disjoint_union([complete_multipartite(3, 1)] * 2),
    "4xK3": disjoint_union([complete_multipartite(3, 1)] * 4),
    "C4x3": blow_up(cycle(4), 3),
    "rr10_3": random_regular(10, 3, 5),
    "rr12_4": random_regular(12, 4, 11),
}
