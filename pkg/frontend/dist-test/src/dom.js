/** Minimal DOM construction helper. */
export function h(tag, attrs = {}, ...children) {
    const el = document.createElement(tag);
    for (const [key, value] of Object.entries(attrs)) {
        if (typeof value === "function") {
            el.addEventListener(key.replace(/^on/, ""), value);
        }
        else if (key === "class") {
            el.className = value;
        }
        else {
            el.setAttribute(key, value);
        }
    }
    for (const child of children) {
        if (child === null)
            continue;
        el.append(child);
    }
    return el;
}
export function clear(el) {
    el.replaceChildren();
    return el;
}
