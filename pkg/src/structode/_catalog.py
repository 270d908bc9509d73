"""Closed-form structural equations on a uniform grid.

Each entry lists K+1 rows (derivative order k = 0..K, scaled by dt^k) of
R+1 integers (nodes n, n+1, ..., n+R). Entries of one (K, R) pair form a
hierarchical family: entry s annihilates pi_m for m <= M-s.
"""

STRUCTURAL = {
    (1, 1): [
        [(-2, 2), (-1, -1)],
    ],
    (1, 2): [
        [(-3, 0, 3), (-1, -4, -1)],
        [(2, -4, 2), (1, 0, -1)],
    ],
    (1, 3): [
        [(11, 27, -27, -11), (3, 27, 27, 3)],
        [(19, 0, -27, 8), (6, 27, 0, -3)],
        [(-13, 27, -27, 13), (-6, 0, 0, -6)],
    ],
    (2, 1): [
        [(-12, 12), (-6, -6), (-1, 1)],
        [(-6, 6), (-2, -4), (0, 1)],
    ],
    (2, 2): [
        [(24, -48, 24), (9, 0, -9), (1, -8, 1)],
        [(-15, 0, 15), (-7, -16, -7), (-1, 0, 1)],
        [(-7, -16, 23), (-2, -16, -12), (0, 0, 2)],
        [(-29, 16, 13), (-10, -32, 0), (0, 0, -2)],
    ],
    (2, 3): [
        [(-103, 729, -729, 103), (-33, 243, 243, -33), (-3, 81, -81, 3)],
        [(173, -486, 243, 70), (60, -81, -162, -27), (6, -81, 0, 3)],
        [(-113, -81, 81, 113), (-48, -162, -162, -48), (-6, 0, 0, 6)],
        [(-16, -81, 0, 97), (-4, -54, -108, -44), (0, 0, 0, 6)],
        [(436, 945, -1188, -193), (120, 1026, 864, 0), (0, 0, 0, 18)],
        [(-524, 81, 540, -97), (-168, -702, 0, 0), (0, 0, 0, 18)],
    ],
    (3, 1): [
        [(120, -120), (60, 60), (12, -12), (1, 1)],
        [(60, -60), (24, 36), (3, -9), (0, 1)],
        [(-48, 48), (-30, -18), (-6, 0), (0, 1)],
    ],
    (3, 2): [
        [(315, 0, -315), (123, 384, 123), (18, 0, -18), (1, 16, 1)],
        [(-192, 384, -192), (-87, 0, 87), (-15, 48, -15), (-1, 0, 1)],
        [(-87, 384, -297), (-30, 96, 144), (-3, 48, -27), (0, 0, 2)],
        [(561, -912, 351), (213, 96, -99), (24, -168, 0), (0, 0, 2)],
        # the usual printed form of this entry has the dt line off by a factor 2
        [(-258, 96, 162), (-123, -240, -57), (-18, 0, 0), (0, 0, 2)],
        [(-51, -48, 99), (-15, -96, -39), (0, 0, 0), (0, 0, 2)],
    ],
}
