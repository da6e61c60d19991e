/** Tiny element builder; keeps the views free of innerHTML string soup. */
export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

/** Inline notice area shared by all views; API errors land here. */
export function notice(container: HTMLElement, text: string, kind: "error" | "info" = "error"): void {
  const box = container.querySelector(".notice");
  if (box instanceof HTMLElement) {
    box.textContent = text;
    box.dataset.kind = kind;
    box.classList.toggle("hidden", text === "");
  }
}

export function noticeSlot(): HTMLElement {
  return el("div", { class: "notice hidden", "data-kind": "info" });
}
