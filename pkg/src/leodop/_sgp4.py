"""Near-Earth SGP4 analytic propagator, vectorized over time.

Implements the standard near-Earth branch of SGP4 (WGS-72 gravity model,
Kozai mean motion input) producing TEME position/velocity from TLE mean
elements. Deep-space objects (period >= 225 min) are outside the LEO scope
of this package and are rejected at initialization.

No packaged SGP4 implementation is available in this environment, hence
this self-contained port of the published algorithm. Propagation accepts an
array of minutes-past-epoch and evaluates all epochs in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PropagationDiverged

# WGS-72 constants (the canonical set for TLE/SGP4)
RADIUS_EARTH_KM = 6378.135
_XKE = 0.0743669161331734132  # 60 / sqrt(re^3 / mu_wgs72), er^1.5 / min
_J2 = 0.001082616
_J3 = -0.00000253881
_J4 = -0.00000165597
_J3OJ2 = _J3 / _J2

_TWOPI = 2.0 * math.pi
_X2O3 = 2.0 / 3.0

# km/s per (earth radii * xke / min)
_VKMPERSEC = RADIUS_EARTH_KM * _XKE / 60.0


@dataclass(frozen=True)
class Sgp4Params:
    """Frozen initialization products of the near-Earth SGP4 algorithm."""

    ecco: float
    inclo: float
    nodeo: float
    argpo: float
    mo: float
    no_unkozai: float
    bstar: float
    isimp: bool
    aycof: float
    con41: float
    cc1: float
    cc4: float
    cc5: float
    d2: float
    d3: float
    d4: float
    delmo: float
    eta: float
    argpdot: float
    omgcof: float
    sinmao: float
    t2cof: float
    t3cof: float
    t4cof: float
    t5cof: float
    x1mth2: float
    x7thm1: float
    mdot: float
    nodedot: float
    xlcof: float
    xmcof: float
    nodecf: float


def sgp4_init(no_kozai: float, ecco: float, inclo: float, nodeo: float,
              argpo: float, mo: float, bstar: float) -> Sgp4Params:
    """Initialize the near-Earth SGP4 coefficients.

    Args:
        no_kozai: Kozai mean motion at epoch, rad/min (as decoded from a TLE).
        ecco, inclo, nodeo, argpo, mo: eccentricity and angles (rad) at epoch.
        bstar: drag term, 1/earth-radii.

    Raises:
        PropagationDiverged: deep-space orbit or non-elliptical elements.
    """
    if not 0.0 <= ecco < 1.0:
        raise PropagationDiverged(f"eccentricity {ecco} outside [0, 1)")
    if no_kozai <= 0.0:
        raise PropagationDiverged("non-positive mean motion")

    eccsq = ecco * ecco
    omeosq = 1.0 - eccsq
    rteosq = math.sqrt(omeosq)
    cosio = math.cos(inclo)
    cosio2 = cosio * cosio
    sinio = math.sin(inclo)

    # recover the Brouwer mean motion from the Kozai value
    ak = (_XKE / no_kozai) ** _X2O3
    d1 = 0.75 * _J2 * (3.0 * cosio2 - 1.0) / (rteosq * omeosq)
    delta = d1 / (ak * ak)
    adel = ak * (1.0 - delta * delta
                 - delta * (1.0 / 3.0 + 134.0 * delta * delta / 81.0))
    delta = d1 / (adel * adel)
    no_unkozai = no_kozai / (1.0 + delta)

    if _TWOPI / no_unkozai >= 225.0:
        raise PropagationDiverged(
            "deep-space orbit (period >= 225 min) is not supported; LEO only")

    ao = (_XKE / no_unkozai) ** _X2O3
    po = ao * omeosq
    con42 = 1.0 - 5.0 * cosio2
    con41 = -con42 - cosio2 - cosio2
    posq = po * po
    rp = ao * (1.0 - ecco)

    if rp < 1.0:
        raise PropagationDiverged("perigee below Earth surface at epoch")

    perige = (rp - 1.0) * RADIUS_EARTH_KM
    isimp = perige < 220.0

    # atmospheric fence parameters, lowered for low perigees
    sfour = 78.0 / RADIUS_EARTH_KM + 1.0
    qzms24 = ((120.0 - 78.0) / RADIUS_EARTH_KM) ** 4
    if perige < 156.0:
        sfour = perige - 78.0
        if perige < 98.0:
            sfour = 20.0
        qzms24 = ((120.0 - sfour) / RADIUS_EARTH_KM) ** 4
        sfour = sfour / RADIUS_EARTH_KM + 1.0

    pinvsq = 1.0 / posq
    tsi = 1.0 / (ao - sfour)
    eta = ao * ecco * tsi
    etasq = eta * eta
    eeta = ecco * eta
    psisq = abs(1.0 - etasq)
    coef = qzms24 * tsi ** 4
    coef1 = coef / psisq ** 3.5

    cc2 = coef1 * no_unkozai * (
        ao * (1.0 + 1.5 * etasq + eeta * (4.0 + etasq))
        + 0.375 * _J2 * tsi / psisq * con41
        * (8.0 + 3.0 * etasq * (8.0 + etasq)))
    cc1 = bstar * cc2
    cc3 = 0.0
    if ecco > 1.0e-4:
        cc3 = -2.0 * coef * tsi * _J3OJ2 * no_unkozai * sinio / ecco
    x1mth2 = 1.0 - cosio2
    cc4 = 2.0 * no_unkozai * coef1 * ao * omeosq * (
        eta * (2.0 + 0.5 * etasq)
        + ecco * (0.5 + 2.0 * etasq)
        - _J2 * tsi / (ao * psisq)
        * (-3.0 * con41 * (1.0 - 2.0 * eeta + etasq * (1.5 - 0.5 * eeta))
           + 0.75 * x1mth2 * (2.0 * etasq - eeta * (1.0 + etasq))
           * math.cos(2.0 * argpo)))
    cc5 = 2.0 * coef1 * ao * omeosq * (
        1.0 + 2.75 * (etasq + eeta) + eeta * etasq)

    cosio4 = cosio2 * cosio2
    temp1 = 1.5 * _J2 * pinvsq * no_unkozai
    temp2 = 0.5 * temp1 * _J2 * pinvsq
    temp3 = -0.46875 * _J4 * pinvsq * pinvsq * no_unkozai
    mdot = (no_unkozai + 0.5 * temp1 * rteosq * con41
            + 0.0625 * temp2 * rteosq
            * (13.0 - 78.0 * cosio2 + 137.0 * cosio4))
    argpdot = (-0.5 * temp1 * con42
               + 0.0625 * temp2 * (7.0 - 114.0 * cosio2 + 395.0 * cosio4)
               + temp3 * (3.0 - 36.0 * cosio2 + 49.0 * cosio4))
    xhdot1 = -temp1 * cosio
    nodedot = xhdot1 + (0.5 * temp2 * (4.0 - 19.0 * cosio2)
                        + 2.0 * temp3 * (3.0 - 7.0 * cosio2)) * cosio

    omgcof = bstar * cc3 * math.cos(argpo)
    xmcof = 0.0
    if ecco > 1.0e-4:
        xmcof = -_X2O3 * coef * bstar / eeta
    nodecf = 3.5 * omeosq * xhdot1 * cc1
    t2cof = 1.5 * cc1
    if abs(cosio + 1.0) > 1.5e-12:
        xlcof = -0.25 * _J3OJ2 * sinio * (3.0 + 5.0 * cosio) / (1.0 + cosio)
    else:
        xlcof = -0.25 * _J3OJ2 * sinio * (3.0 + 5.0 * cosio) / 1.5e-12
    aycof = -0.5 * _J3OJ2 * sinio
    delmo = (1.0 + eta * math.cos(mo)) ** 3
    sinmao = math.sin(mo)
    x7thm1 = 7.0 * cosio2 - 1.0

    d2 = d3 = d4 = t3cof = t4cof = t5cof = 0.0
    if not isimp:
        cc1sq = cc1 * cc1
        d2 = 4.0 * ao * tsi * cc1sq
        temp = d2 * tsi * cc1 / 3.0
        d3 = (17.0 * ao + sfour) * temp
        d4 = 0.5 * temp * ao * tsi * (221.0 * ao + 31.0 * sfour) * cc1
        t3cof = d2 + 2.0 * cc1sq
        t4cof = 0.25 * (3.0 * d3 + cc1 * (12.0 * d2 + 10.0 * cc1sq))
        t5cof = 0.2 * (3.0 * d4 + 12.0 * cc1 * d3 + 6.0 * d2 * d2
                       + 15.0 * cc1sq * (2.0 * d2 + cc1sq))

    return Sgp4Params(
        ecco=ecco, inclo=inclo, nodeo=nodeo, argpo=argpo, mo=mo,
        no_unkozai=no_unkozai, bstar=bstar, isimp=isimp,
        aycof=aycof, con41=con41, cc1=cc1, cc4=cc4, cc5=cc5,
        d2=d2, d3=d3, d4=d4, delmo=delmo, eta=eta, argpdot=argpdot,
        omgcof=omgcof, sinmao=sinmao, t2cof=t2cof, t3cof=t3cof,
        t4cof=t4cof, t5cof=t5cof, x1mth2=x1mth2, x7thm1=x7thm1,
        mdot=mdot, nodedot=nodedot, xlcof=xlcof, xmcof=xmcof,
        nodecf=nodecf)


def sgp4_propagate(p: Sgp4Params, tsince):
    """Propagate to ``tsince`` minutes past epoch (scalar or array).

    Returns TEME position (km) and velocity (km/s) with shape (N, 3).

    Raises:
        PropagationDiverged: decayed orbit or internal numerical failure at
            any requested epoch.
    """
    t = np.atleast_1d(np.asarray(tsince, dtype=float))

    # secular gravity and drag
    xmdf = p.mo + p.mdot * t
    argpdf = p.argpo + p.argpdot * t
    nodedf = p.nodeo + p.nodedot * t
    argpm = argpdf
    mm = xmdf
    t2 = t * t
    nodem = nodedf + p.nodecf * t2
    tempa = 1.0 - p.cc1 * t
    tempe = p.bstar * p.cc4 * t
    templ = p.t2cof * t2

    if not p.isimp:
        delomg = p.omgcof * t
        delmtemp = 1.0 + p.eta * np.cos(xmdf)
        delm = p.xmcof * (delmtemp ** 3 - p.delmo)
        temp = delomg + delm
        mm = xmdf + temp
        argpm = argpdf - temp
        t3 = t2 * t
        t4 = t3 * t
        tempa = tempa - p.d2 * t2 - p.d3 * t3 - p.d4 * t4
        tempe = tempe + p.bstar * p.cc5 * (np.sin(mm) - p.sinmao)
        templ = templ + p.t3cof * t3 + t4 * (p.t4cof + t * p.t5cof)

    nm = p.no_unkozai
    em = p.ecco - tempe
    am = (_XKE / nm) ** _X2O3 * tempa * tempa
    nm = _XKE / am ** 1.5
    if np.any(em >= 1.0) or np.any(em < -0.001):
        raise PropagationDiverged("eccentricity left [0, 1): orbit decayed")
    em = np.maximum(em, 1.0e-6)
    mm = mm + p.no_unkozai * templ
    xlm = mm + argpm + nodem

    nodem = np.fmod(nodem, _TWOPI)
    argpm = np.fmod(argpm, _TWOPI)
    xlm = np.fmod(xlm, _TWOPI)
    mm = np.fmod(xlm - argpm - nodem, _TWOPI)

    # long-period periodics
    sinip = math.sin(p.inclo)
    cosip = math.cos(p.inclo)
    axnl = em * np.cos(argpm)
    temp = 1.0 / (am * (1.0 - em * em))
    aynl = em * np.sin(argpm) + temp * p.aycof
    xl = mm + argpm + nodem + temp * p.xlcof * axnl

    # Kepler's equation in (axnl, aynl) form
    u = np.fmod(xl - nodem, _TWOPI)
    eo1 = u.copy()
    for _ in range(10):
        sineo1 = np.sin(eo1)
        coseo1 = np.cos(eo1)
        tem5 = 1.0 - coseo1 * axnl - sineo1 * aynl
        tem5 = (u - aynl * coseo1 + axnl * sineo1 - eo1) / tem5
        tem5 = np.clip(tem5, -0.95, 0.95)
        eo1 = eo1 + tem5
        if np.all(np.abs(tem5) < 1.0e-12):
            break
    sineo1 = np.sin(eo1)
    coseo1 = np.cos(eo1)

    # short-period preliminary quantities
    ecose = axnl * coseo1 + aynl * sineo1
    esine = axnl * sineo1 - aynl * coseo1
    el2 = axnl * axnl + aynl * aynl
    pl = am * (1.0 - el2)
    if np.any(pl < 0.0):
        raise PropagationDiverged("semi-latus rectum became negative")

    rl = am * (1.0 - ecose)
    rdotl = np.sqrt(am) * esine / rl
    rvdotl = np.sqrt(pl) / rl
    betal = np.sqrt(1.0 - el2)
    temp = esine / (1.0 + betal)
    sinu = am / rl * (sineo1 - aynl - axnl * temp)
    cosu = am / rl * (coseo1 - axnl + aynl * temp)
    su = np.arctan2(sinu, cosu)
    sin2u = (cosu + cosu) * sinu
    cos2u = 1.0 - 2.0 * sinu * sinu
    temp = 1.0 / pl
    temp1 = 0.5 * _J2 * temp
    temp2 = temp1 * temp

    # short-period periodics
    mrt = (rl * (1.0 - 1.5 * temp2 * betal * p.con41)
           + 0.5 * temp1 * p.x1mth2 * cos2u)
    su = su - 0.25 * temp2 * p.x7thm1 * sin2u
    xnode = nodem + 1.5 * temp2 * cosip * sin2u
    xinc = p.inclo + 1.5 * temp2 * cosip * sinip * cos2u
    mvt = rdotl - nm * temp1 * p.x1mth2 * sin2u / _XKE
    rvdot = rvdotl + nm * temp1 * (p.x1mth2 * cos2u + 1.5 * p.con41) / _XKE

    if np.any(mrt < 1.0):
        raise PropagationDiverged("satellite decayed (radius below Earth surface)")

    # orientation vectors
    sinsu = np.sin(su)
    cossu = np.cos(su)
    snod = np.sin(xnode)
    cnod = np.cos(xnode)
    sini = np.sin(xinc)
    cosi = np.cos(xinc)
    xmx = -snod * cosi
    xmy = cnod * cosi
    uvec = np.stack([xmx * sinsu + cnod * cossu,
                     xmy * sinsu + snod * cossu,
                     sini * sinsu], axis=-1)
    vvec = np.stack([xmx * cossu - cnod * sinsu,
                     xmy * cossu - snod * sinsu,
                     sini * cossu], axis=-1)

    r = uvec * (mrt * RADIUS_EARTH_KM)[:, None]
    v = (uvec * mvt[:, None] + vvec * rvdot[:, None]) * _VKMPERSEC
    return r, v
