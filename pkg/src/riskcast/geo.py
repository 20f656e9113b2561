"""Spherical-earth distance helpers and nearest-neighbor orderings."""
from __future__ import annotations

import math

import numpy as np

EARTH_RADIUS_KM = 6371.0088


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in km between two (lat, lon) points in degrees.

    Uses a spherical earth of radius 6371.0088 km. Symmetric, and zero
    exactly when both points coincide.
    """
    lat1, lon1 = a
    lat2, lon2 = b
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    s = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(s))


def haversine_matrix(lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Pairwise great-circle distances (km) for coordinate arrays in degrees."""
    phi = np.radians(np.asarray(lats, dtype=float))
    lam = np.radians(np.asarray(lons, dtype=float))
    dphi = phi[:, None] - phi[None, :]
    dlam = lam[:, None] - lam[None, :]
    s = np.sin(dphi / 2.0) ** 2 + np.cos(phi)[:, None] * np.cos(phi)[None, :] * np.sin(dlam / 2.0) ** 2
    # guard asin against rounding slightly past 1
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(s, 0.0, 1.0)))


def neighbor_order(region) -> tuple[tuple[int, ...], ...]:
    """Per-location ordering of all location indices by ascending distance.

    Each center's ordering starts with the center itself; distance ties are
    broken by ascending location id, except that the center always comes
    first even when another location shares its coordinates.
    """
    locs = region.locations
    dist = haversine_matrix(region.lats, region.lons)
    orders = []
    for c in range(len(locs)):
        ranked = sorted(range(len(locs)), key=lambda j: (dist[c, j], j != c, locs[j].id))
        orders.append(tuple(ranked))
    return tuple(orders)
