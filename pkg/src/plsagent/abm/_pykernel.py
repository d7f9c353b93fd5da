"""Pure-Python activation kernel; reference semantics for the Cython build."""


def step(order, u_hum, u_learn, p_hum, p_learn_h, p_learn_n, coop_ok, nbr,
         learned, humanized, att_hum, att_learn):
    """Activate every agent once in ``order``; mutate flag arrays in place.

    Returns the number of flag changes (attempt flags included).
    """
    n = len(order)
    order_l = order.tolist()
    u_h = u_hum.tolist()
    u_l = u_learn.tolist()
    ph = p_hum.tolist()
    plh = p_learn_h.tolist()
    pln = p_learn_n.tolist()
    ok = coop_ok.tolist()
    links = nbr.tolist()
    lrn = learned.tolist()
    hum = humanized.tolist()
    ah = att_hum.tolist()
    al = att_learn.tolist()

    changes = 0
    for k in range(n):
        i = order_l[k]
        if not ah[i]:
            ah[i] = 1
            changes += 1
            if u_h[i] < ph[i]:
                hum[i] = 1
                changes += 1
        if not al[i]:
            al[i] = 1
            changes += 1
            p = plh[i] if hum[i] else pln[i]
            if u_l[i] < p and not lrn[i]:
                lrn[i] = 1
                changes += 1
        if ok[i]:
            for j in links[i]:
                if j >= 0 and ok[j] and lrn[i] != lrn[j]:
                    lrn[i] = 1
                    lrn[j] = 1
                    changes += 1

    learned[:] = lrn
    humanized[:] = hum
    att_hum[:] = ah
    att_learn[:] = al
    return changes


def frontier(nbr, coop_ok, learned):
    """Count linked cooperative pairs with exactly one learned member."""
    ok = coop_ok.tolist()
    lrn = learned.tolist()
    count = 0
    for i, row in enumerate(nbr.tolist()):
        if not ok[i]:
            continue
        for j in row:
            if j > i and ok[j] and lrn[i] != lrn[j]:
                count += 1
    return count
