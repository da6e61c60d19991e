#!/usr/bin/env python3
"""Regenerate the simulated sites and task fixtures under sites/ and tasks/.

Run from the repo root:  python scripts/build_fixtures.py

Pages are laid out as a single vertical flow (x=40, width 600). Shared
element ids across page variants (list rows, filter/sort comboboxes) are
given explicitly so cross-page diffs stay meaningful; everything else is
numbered per page.
"""

from __future__ import annotations

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
ROW_H = 44
ROW_GAP = 8
PAGE_TOP = 80


def N(role, name="", text="", editable=False, id=None, h=ROW_H):
    return {"role": role, "name": name, "text": text,
            "editable": editable, "id": id, "h": h}


def gap(px):
    return {"spacer": px}


def build_page(title, rows):
    """Lay rows out vertically; returns (page_dict, name->id map)."""
    used = {r["id"] for r in rows if not r.get("spacer") and r.get("id")}
    used |= {1, 2}
    next_id = 3
    y = PAGE_TOP
    children = []
    names = {}
    for row in rows:
        if row.get("spacer"):
            y += row["spacer"]
            continue
        node_id = row["id"]
        if node_id is None:
            while next_id in used:
                next_id += 1
            node_id = next_id
            used.add(node_id)
        node = {
            "id": node_id,
            "role": row["role"],
            "name": row["name"],
            "text": row["text"],
            "bbox": {"x": 40, "y": y, "width": 600, "height": row["h"]},
            "children": [],
            "editable": row["editable"],
            "focused": False,
        }
        children.append(node)
        if row["name"]:
            names[row["name"]] = node_id
        y += row["h"] + ROW_GAP
    total_h = y + 40
    root = {
        "id": 1, "role": "document", "name": title, "text": "",
        "bbox": {"x": 0, "y": 0, "width": 1280, "height": max(total_h, 720)},
        "children": [{
            "id": 2, "role": "region", "name": "main", "text": "",
            "bbox": {"x": 0, "y": PAGE_TOP - 16, "width": 1280,
                     "height": max(total_h - PAGE_TOP + 16, 640)},
            "children": children, "editable": False, "focused": False,
        }],
        "editable": False, "focused": False,
    }
    return {"title": title, "root": root}, names


def T(page, action, target=None, argument=None, effects=(), note=""):
    t = {"page": page, "action": action, "effects": list(effects)}
    if target is not None:
        t["target"] = target
    if argument is not None:
        t["argument"] = argument
    if note:
        t["note"] = note
    return t


def goto(page):
    return {"op": "goto", "page": page}


def set_field(field, value):
    return {"op": "set_field", "field": field, "value": value}


def site(site_id, start_page, page_specs, transitions):
    pages = {}
    ids = {}
    for page_id, (title, rows) in page_specs.items():
        pages[page_id], ids[page_id] = build_page(title, rows)
    return {
        "site_id": site_id,
        "start_page": start_page,
        "pages": pages,
        "transitions": transitions(ids),
    }, ids


def task(task_id, site_id, category, instruction, success, solution,
         start_page=None):
    d = {
        "task_id": task_id,
        "site_id": site_id,
        "category": category,
        "instruction": instruction,
        "success": success,
        "solution": solution,
    }
    if start_page:
        d["start_page"] = start_page
    return d


def click(i):
    return f"ACTION: click({i})"


def type_text(i, s):
    return f'ACTION: type_text({i}, {json.dumps(s)})'


def select(i, s):
    return f'ACTION: select_option({i}, {json.dumps(s)})'


def scroll(i):
    return f"ACTION: scroll_into({i})"


def answer(s):
    return f"ACTION: answer({json.dumps(s)})"


def catalog_site():
    pages = {
        "portal": ("Employee Portal", [
            N("heading", "Employee Portal"),
            N("link", "Service Catalog"),
            N("link", "My Requests"),
            N("link", "Knowledge Base"),
        ]),
        "home": ("Service Catalog", [
            N("heading", "Service Catalog"),
            N("text", "Browse categories", "Order hardware, software and supplies."),
            N("link", "Hardware"),
            N("link", "Software"),
            N("link", "Office Supplies"),
        ]),
        "hardware": ("Hardware", [
            N("heading", "Hardware"),
            N("link", "Sales Laptop"),
            N("link", "Developer Laptop"),
            N("link", "Docking Station"),
            N("link", "Monitor 27in"),
        ]),
        "software": ("Software", [
            N("heading", "Software"),
            N("link", "Salesforce CRM"),
            N("link", "IDE License"),
        ]),
        "item_sales_laptop": ("Sales Laptop", [
            N("heading", "Sales Laptop"),
            N("text", "Description", "Standard laptop for sales staff."),
            N("text", "Specs", "14in, 16 GB RAM, 512 GB SSD."),
            N("textbox", "Quantity", "1", editable=True),
            N("checkbox", "Adobe Acrobat"),
            N("checkbox", "Slack"),
            gap(520),
            N("textbox", "Additional software requirements", "", editable=True, h=88),
            N("button", "Order Now"),
        ]),
        "item_monitor": ("Monitor 27in", [
            N("heading", "Monitor 27in"),
            N("text", "Description", "27-inch QHD monitor."),
            N("textbox", "Quantity", "1", editable=True),
            N("checkbox", "Wall mount kit"),
            N("button", "Order Now"),
        ]),
        "item_crm": ("Salesforce CRM", [
            N("heading", "Salesforce CRM"),
            N("text", "Description", "CRM seat license."),
            N("checkbox", "Manager approved"),
            N("button", "Order Now"),
        ]),
        "confirmation": ("Order confirmation", [
            N("heading", "Request submitted"),
            N("text", "Request number", "RQ-0042"),
            N("button", "Copy request number"),
            N("link", "Back to catalog"),
        ]),
        "confirmation_monitor": ("Order confirmation", [
            N("heading", "Request submitted"),
            N("text", "Request number", "RQ-0043"),
            N("button", "Copy request number"),
            N("link", "Back to catalog"),
        ]),
        "confirmation_crm": ("Order confirmation", [
            N("heading", "Request submitted"),
            N("text", "Request number", "RQ-0044"),
            N("button", "Copy request number"),
            N("link", "Back to catalog"),
        ]),
    }

    def transitions(ids):
        return [
            T("portal", "click", ids["portal"]["Service Catalog"],
              effects=[goto("home")], note="opened Service Catalog"),
            T("home", "click", ids["home"]["Hardware"],
              effects=[goto("hardware")]),
            T("home", "click", ids["home"]["Software"],
              effects=[goto("software")]),
            T("hardware", "click", ids["hardware"]["Sales Laptop"],
              effects=[goto("item_sales_laptop")]),
            T("hardware", "click", ids["hardware"]["Monitor 27in"],
              effects=[goto("item_monitor")]),
            T("software", "click", ids["software"]["Salesforce CRM"],
              effects=[goto("item_crm")]),
            T("item_sales_laptop", "click", ids["item_sales_laptop"]["Order Now"],
              effects=[goto("confirmation"), set_field("last_order", "sales-laptop")],
              note="order submitted"),
            T("item_monitor", "click", ids["item_monitor"]["Order Now"],
              effects=[goto("confirmation_monitor"),
                       set_field("last_order", "monitor-27in")],
              note="order submitted"),
            T("item_crm", "click", ids["item_crm"]["Order Now"],
              effects=[goto("confirmation_crm"),
                       set_field("last_order", "salesforce-crm")],
              note="order submitted"),
            T("confirmation", "click", ids["confirmation"]["Copy request number"],
              effects=[set_field("clipboard", "RQ-0042")],
              note="copied request number RQ-0042"),
            T("confirmation_monitor", "click",
              ids["confirmation_monitor"]["Copy request number"],
              effects=[set_field("clipboard", "RQ-0043")],
              note="copied request number RQ-0043"),
            T("confirmation_crm", "click",
              ids["confirmation_crm"]["Copy request number"],
              effects=[set_field("clipboard", "RQ-0044")],
              note="copied request number RQ-0044"),
            T("confirmation", "click", ids["confirmation"]["Back to catalog"],
              effects=[goto("home")]),
            T("confirmation_monitor", "click",
              ids["confirmation_monitor"]["Back to catalog"],
              effects=[goto("home")]),
            T("confirmation_crm", "click",
              ids["confirmation_crm"]["Back to catalog"],
              effects=[goto("home")]),
        ]

    spec, ids = site("catalog", "portal", pages, transitions)
    item = ids["item_sales_laptop"]
    tasks = [
        task(
            "catalog-order-laptop", "catalog", "service-catalog",
            "Order 2 Sales Laptops with Adobe Acrobat preinstalled, note that "
            "Salesforce CRM is required, submit the order, and copy the "
            "request number.",
            success=[
                {"kind": "page_is", "page": "confirmation"},
                {"kind": "field_equals", "field": "Quantity", "value": "2"},
                {"kind": "field_equals", "field": "Adobe Acrobat", "value": "checked"},
                {"kind": "field_equals", "field": "clipboard", "value": "RQ-0042"},
            ],
            solution=[
                click(ids["portal"]["Service Catalog"]),
                click(ids["home"]["Hardware"]),
                click(ids["hardware"]["Sales Laptop"]),
                type_text(item["Quantity"], "2"),
                click(item["Adobe Acrobat"]),
                type_text(item["Additional software requirements"],
                          "Install Salesforce CRM"),
                click(item["Order Now"]),
                click(ids["confirmation"]["Copy request number"]),
            ],
        ),
        task(
            "catalog-order-monitor", "catalog", "service-catalog",
            "Order 1 Monitor 27in with the wall mount kit and copy the "
            "request number.",
            success=[
                {"kind": "page_is", "page": "confirmation_monitor"},
                {"kind": "field_equals", "field": "Wall mount kit",
                 "value": "checked"},
                {"kind": "field_equals", "field": "clipboard", "value": "RQ-0043"},
            ],
            solution=[
                click(ids["portal"]["Service Catalog"]),
                click(ids["home"]["Hardware"]),
                click(ids["hardware"]["Monitor 27in"]),
                click(ids["item_monitor"]["Wall mount kit"]),
                click(ids["item_monitor"]["Order Now"]),
                click(ids["confirmation_monitor"]["Copy request number"]),
            ],
        ),
        task(
            "catalog-hardware-count", "catalog", "service-catalog",
            "How many hardware items does the catalog list?",
            success=[{"kind": "answer_contains", "value": "4"}],
            solution=[
                click(ids["portal"]["Service Catalog"]),
                click(ids["home"]["Hardware"]),
                answer("4 hardware items are listed."),
            ],
        ),
    ]
    return spec, tasks


def dashboard_site():
    pages = {
        "overview": ("Operations Dashboard", [
            N("heading", "Operations Dashboard"),
            N("text", "Open tickets", "27"),
            N("text", "Closed tickets", "183"),
            N("text", "Uptime", "99.95%"),
            N("link", "Reports"),
            gap(560),
            N("text", "Error budget", "12%"),
            N("text", "Deploy count", "42"),
        ]),
        "reports": ("Weekly Report", [
            N("heading", "Weekly Report"),
            N("text", "Week 31 incidents", "3"),
            N("text", "Week 30 incidents", "5"),
            N("link", "Back to overview"),
        ]),
    }

    def transitions(ids):
        return [
            T("overview", "click", ids["overview"]["Reports"],
              effects=[goto("reports")]),
            T("reports", "click", ids["reports"]["Back to overview"],
              effects=[goto("overview")]),
        ]

    spec, ids = site("dashboard", "overview", pages, transitions)
    tasks = [
        task(
            "dash-open-tickets", "dashboard", "dashboard",
            "How many open tickets does the dashboard show?",
            success=[{"kind": "answer_contains", "value": "27"}],
            solution=[answer("The dashboard shows 27 open tickets.")],
        ),
        task(
            "dash-error-budget", "dashboard", "dashboard",
            "What is the remaining error budget percentage?",
            success=[{"kind": "answer_contains", "value": "12"}],
            solution=[
                scroll(ids["overview"]["Error budget"]),
                answer("The error budget is 12%."),
            ],
        ),
        task(
            "dash-week31-incidents", "dashboard", "dashboard",
            "Open the weekly report and state how many incidents happened "
            "in week 31.",
            success=[
                {"kind": "page_is", "page": "reports"},
                {"kind": "answer_contains", "value": "3"},
            ],
            solution=[
                click(ids["overview"]["Reports"]),
                answer("Week 31 had 3 incidents."),
            ],
        ),
    ]
    return spec, tasks


def form_site():
    pages = {
        "form": ("Expense Claim", [
            N("heading", "Expense Claim Form"),
            N("textbox", "Employee name", "", editable=True),
            N("textbox", "Amount", "", editable=True),
            N("combobox", "Cost center", "unset"),
            N("checkbox", "Receipts attached"),
            gap(520),
            N("textbox", "Justification", "", editable=True, h=88),
            N("button", "Submit claim"),
        ]),
        "submitted": ("Claim submitted", [
            N("heading", "Claim submitted"),
            N("text", "Claim number", "CL-1009"),
            N("text", "Status", "Awaiting approval"),
        ]),
    }

    def transitions(ids):
        return [
            T("form", "click", ids["form"]["Submit claim"],
              effects=[goto("submitted"), set_field("claim_submitted", "yes")],
              note="claim submitted"),
        ]

    spec, ids = site("expense", "form", pages, transitions)
    f = ids["form"]
    tasks = [
        task(
            "form-submit-claim", "expense", "form",
            "Submit an expense claim for Dana Fox over 412.50 against the "
            "R&D cost center, with receipts attached.",
            success=[
                {"kind": "page_is", "page": "submitted"},
                {"kind": "field_equals", "field": "Employee name", "value": "Dana Fox"},
                {"kind": "field_equals", "field": "Amount", "value": "412.50"},
                {"kind": "field_equals", "field": "Cost center", "value": "R&D"},
                {"kind": "field_equals", "field": "Receipts attached",
                 "value": "checked"},
            ],
            solution=[
                type_text(f["Employee name"], "Dana Fox"),
                type_text(f["Amount"], "412.50"),
                select(f["Cost center"], "R&D"),
                click(f["Receipts attached"]),
                click(f["Submit claim"]),
            ],
        ),
        task(
            "form-travel-claim", "expense", "form",
            "File a travel expense claim for Kim Lee over 88.00 against the "
            "Sales cost center with the justification 'Client visit', "
            "receipts attached.",
            success=[
                {"kind": "page_is", "page": "submitted"},
                {"kind": "field_equals", "field": "Employee name", "value": "Kim Lee"},
                {"kind": "field_equals", "field": "Amount", "value": "88.00"},
                {"kind": "field_equals", "field": "Cost center", "value": "Sales"},
                {"kind": "field_equals", "field": "Justification",
                 "value": "Client visit"},
                {"kind": "field_equals", "field": "Receipts attached",
                 "value": "checked"},
            ],
            solution=[
                type_text(f["Employee name"], "Kim Lee"),
                type_text(f["Amount"], "88.00"),
                select(f["Cost center"], "Sales"),
                click(f["Receipts attached"]),
                scroll(f["Justification"]),
                type_text(f["Justification"], "Client visit"),
                click(f["Submit claim"]),
            ],
        ),
        task(
            "form-it-claim", "expense", "form",
            "Submit a claim for Ana Ruiz over 129.99 against the IT cost "
            "center, receipts attached.",
            success=[
                {"kind": "page_is", "page": "submitted"},
                {"kind": "field_equals", "field": "Employee name", "value": "Ana Ruiz"},
                {"kind": "field_equals", "field": "Amount", "value": "129.99"},
                {"kind": "field_equals", "field": "Cost center", "value": "IT"},
                {"kind": "field_equals", "field": "Receipts attached",
                 "value": "checked"},
            ],
            solution=[
                type_text(f["Employee name"], "Ana Ruiz"),
                type_text(f["Amount"], "129.99"),
                select(f["Cost center"], "IT"),
                click(f["Receipts attached"]),
                click(f["Submit claim"]),
            ],
        ),
    ]
    return spec, tasks


def kb_site():
    pages = {
        "kb_home": ("Knowledge Base", [
            N("heading", "Knowledge Base"),
            N("link", "VPN Setup Guide"),
            N("link", "Password Reset Policy"),
            N("link", "Printer Troubleshooting"),
            gap(560),
            N("link", "Expense Policy"),
        ]),
        "art_vpn": ("VPN Setup Guide", [
            N("heading", "VPN Setup Guide"),
            N("text", "Client", "Install the AcmeVPN desktop client."),
            N("text", "Network", "Port 443 must be open on the firewall."),
            N("link", "Back to Knowledge Base"),
        ]),
        "art_pw": ("Password Reset Policy", [
            N("heading", "Password Reset Policy"),
            N("text", "Policy", "Passwords expire every 90 days."),
            N("link", "Back to Knowledge Base"),
        ]),
        "art_printer": ("Printer Troubleshooting", [
            N("heading", "Printer Troubleshooting"),
            N("text", "Fix", "Restart the print spooler service."),
            N("link", "Back to Knowledge Base"),
        ]),
        "art_expense": ("Expense Policy", [
            N("heading", "Expense Policy"),
            N("text", "Approval", "Claims above 500 need VP approval."),
            N("link", "Back to Knowledge Base"),
        ]),
    }

    def transitions(ids):
        rules = [
            T("kb_home", "click", ids["kb_home"]["VPN Setup Guide"],
              effects=[goto("art_vpn")]),
            T("kb_home", "click", ids["kb_home"]["Password Reset Policy"],
              effects=[goto("art_pw")]),
            T("kb_home", "click", ids["kb_home"]["Printer Troubleshooting"],
              effects=[goto("art_printer")]),
            T("kb_home", "click", ids["kb_home"]["Expense Policy"],
              effects=[goto("art_expense")]),
        ]
        for page_id in ("art_vpn", "art_pw", "art_printer", "art_expense"):
            rules.append(T(page_id, "click",
                           ids[page_id]["Back to Knowledge Base"],
                           effects=[goto("kb_home")]))
        return rules

    spec, ids = site("kb", "kb_home", pages, transitions)
    tasks = [
        task(
            "kb-vpn-port", "kb", "knowledge",
            "Which port must be open for the VPN to work?",
            success=[{"kind": "answer_contains", "value": "443"}],
            solution=[
                click(ids["kb_home"]["VPN Setup Guide"]),
                answer("Port 443 must be open."),
            ],
        ),
        task(
            "kb-password-days", "kb", "knowledge",
            "After how many days do passwords expire?",
            success=[{"kind": "answer_contains", "value": "90"}],
            solution=[
                click(ids["kb_home"]["Password Reset Policy"]),
                answer("Passwords expire every 90 days."),
            ],
        ),
        task(
            "kb-expense-threshold", "kb", "knowledge",
            "Above what amount do expense claims need VP approval?",
            success=[{"kind": "answer_contains", "value": "500"}],
            solution=[
                scroll(ids["kb_home"]["Expense Policy"]),
                click(ids["kb_home"]["Expense Policy"]),
                answer("Claims above 500 need VP approval."),
            ],
        ),
    ]
    return spec, tasks


TICKETS = [
    ("TCK-101 Printer jam", "high"),
    ("TCK-102 VPN drop", "low"),
    ("TCK-103 Disk full", "high"),
    ("TCK-104 Slow laptop", "medium"),
    ("TCK-105 Email bounce", "high"),
]


def tickets_site():
    filter_box = N("combobox", "Priority filter", "all", id=5)

    def listing(selected):
        rows = [N("heading", "Ticket List"),
                dict(filter_box, text=selected)]
        shown = [(i, t) for i, t in enumerate(TICKETS)
                 if selected == "all" or t[1] == selected]
        rows.append(N("text", "Result count",
                      f"Showing {len(shown)} of {len(TICKETS)}"))
        for i, (name, prio) in shown:
            rows.append(N("row", name, prio, id=50 + i))
        return rows

    pages = {
        "all": ("Ticket List", listing("all")),
        "high": ("Ticket List", listing("high")),
        "medium": ("Ticket List", listing("medium")),
        "low": ("Ticket List", listing("low")),
    }

    def transitions(ids):
        return [
            T("*", "select_option", 5, argument=level, effects=[goto(level)],
              note=f"filtered to {level}")
            for level in ("all", "high", "medium", "low")
        ]

    spec, ids = site("tickets", "all", pages, transitions)
    tasks = [
        task(
            "filter-high-count", "tickets", "list-filter",
            "Filter the ticket list to high priority and report how many "
            "tickets remain.",
            success=[
                {"kind": "page_is", "page": "high"},
                {"kind": "answer_contains", "value": "3"},
            ],
            solution=[
                select(5, "high"),
                answer("3 tickets are high priority."),
            ],
        ),
        task(
            "filter-medium-ticket", "tickets", "list-filter",
            "Which ticket is medium priority?",
            success=[{"kind": "answer_contains", "value": "TCK-104"}],
            solution=[
                select(5, "medium"),
                answer("TCK-104 Slow laptop is the medium-priority ticket."),
            ],
        ),
        task(
            "filter-low-ticket", "tickets", "list-filter",
            "Find the low-priority ticket.",
            success=[{"kind": "answer_contains", "value": "TCK-102"}],
            solution=[
                select(5, "low"),
                answer("TCK-102 VPN drop is low priority."),
            ],
        ),
    ]
    return spec, tasks


ITEMS = [  # (name, price) — ids keyed by position here
    ("Cable HDMI", 4),
    ("Keyboard", 18),
    ("Laptop Stand", 32),
    ("Mouse", 11),
    ("USB Hub", 23),
]


def inventory_site():
    sort_box = N("combobox", "Sort by", "name", id=5)

    def listing(order):
        rows = [N("heading", "Inventory"), dict(sort_box, text=order)]
        indexed = list(enumerate(ITEMS))
        if order == "price":
            indexed.sort(key=lambda p: p[1][1])
        for i, (name, price) in indexed:
            rows.append(N("row", name, f"${price}", id=50 + i))
        return rows

    pages = {
        "by_name": ("Inventory", listing("name")),
        "by_price": ("Inventory", listing("price")),
    }

    def transitions(ids):
        return [
            T("*", "select_option", 5, argument="price",
              effects=[goto("by_price")], note="sorted by price"),
            T("*", "select_option", 5, argument="name",
              effects=[goto("by_name")], note="sorted by name"),
        ]

    spec, ids = site("inventory", "by_name", pages, transitions)
    tasks = [
        task(
            "sort-cheapest", "inventory", "list-sort",
            "Sort the inventory by price and name the cheapest item.",
            success=[
                {"kind": "page_is", "page": "by_price"},
                {"kind": "answer_contains", "value": "Cable HDMI"},
            ],
            solution=[
                select(5, "price"),
                answer("Cable HDMI is the cheapest item at $4."),
            ],
        ),
        task(
            "sort-priciest", "inventory", "list-sort",
            "Which inventory item costs the most?",
            success=[{"kind": "answer_contains", "value": "Laptop Stand"}],
            solution=[
                select(5, "price"),
                answer("Laptop Stand is the most expensive at $32."),
            ],
        ),
        task(
            "sort-second-alpha", "inventory", "list-sort",
            "Sort the inventory by name and report the second item.",
            success=[{"kind": "answer_contains", "value": "Keyboard"}],
            solution=[
                select(5, "name"),
                answer("Keyboard is the second item alphabetically."),
            ],
        ),
    ]
    return spec, tasks


def main():
    sites_dir = ROOT / "sites"
    tasks_dir = ROOT / "tasks"
    sites_dir.mkdir(exist_ok=True)
    tasks_dir.mkdir(exist_ok=True)

    builders = [catalog_site, dashboard_site, form_site, kb_site,
                tickets_site, inventory_site]
    for builder in builders:
        spec, tasks = builder()
        path = sites_dir / f"{spec['site_id']}.json"
        path.write_text(json.dumps(spec, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")
        for t in tasks:
            tpath = tasks_dir / f"{t['task_id']}.json"
            tpath.write_text(json.dumps(t, indent=2, sort_keys=True) + "\n")
            print(f"wrote {tpath}")


if __name__ == "__main__":
    main()
